#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace factrank {

using TokenStream = std::vector<std::string>;

// Lowercases ASCII letters and splits on every non-alphanumeric byte.
// No stemming, no stopword removal; empty tokens are dropped.
TokenStream tokenize(std::string_view text);

}  // namespace factrank
