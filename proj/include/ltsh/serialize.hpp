#pragma once

#include <json.hpp>

#include "ltsh/charp_series.hpp"

namespace ltsh {

/* JSON series interchange. A term is {"exp": "num/den", "coeff": [digits]}
   where the digit list gives the coefficient's coordinates in the power
   basis of F_q over F_p, constant digit first. Emission is sorted by
   exponent, so a value round-trips byte-exactly through dump(). Malformed
   input raises ConfigError. */

nlohmann::json to_json_series(const PerfSeries& s);
nlohmann::json to_json_series(const TruncSeries& s);
nlohmann::json to_json_series2(const TruncSeries2& s); // exp as [i, j], integer cutoff

PerfSeries perf_series_from_json(const FqCtx& F, const nlohmann::json& j);
TruncSeries trunc_series_from_json(const FqCtx& F, const nlohmann::json& j);
TruncSeries2 series2_from_json(const FqCtx& F, const nlohmann::json& j);

} // namespace ltsh
