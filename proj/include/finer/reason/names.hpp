#pragma once

#include <string>
#include <string_view>

namespace finer::reason {

// Display form: trimmed, internal whitespace collapsed to one space, trailing
// periods removed. Throws on names that are empty after cleanup.
std::string normalize_name(std::string_view name);

// Equality key: the display form, Unicode case-folded. Two names are the
// same candidate iff their keys match.
std::string name_key(std::string_view name);

}  // namespace finer::reason
