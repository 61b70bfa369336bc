#pragma once

#include "json.hpp"
#include "sqlknow/sql/fragments.hpp"
#include "sqlknow/sql/units.hpp"

namespace sqlknow::sql {

void to_json(nlohmann::json& j, const Span& s);
void to_json(nlohmann::json& j, const OutputColumn& c);
void to_json(nlohmann::json& j, const SubqueryUnit& u);
void to_json(nlohmann::json& j, const Fragment& f);

// {sql, units[], fragments[]}: the corpus golden and `fragment` command format.
nlohmann::json fragment_dump(const Decomposition& d);

}  // namespace sqlknow::sql
