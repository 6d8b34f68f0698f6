#pragma once

#include <string_view>
#include <vector>

namespace planforge {

/// Files under assets/ are compiled into the library. Names are paths
/// relative to that directory, e.g. "prompts/cidpp_judge.txt".
/// Throws IoError for unknown names.
std::string_view bundled_asset(std::string_view name);

std::vector<std::string_view> bundled_asset_names();

}  // namespace planforge
