#pragma once

#include <string>
#include <string_view>

namespace skelssl {

// Writes to `<path>.tmp` and renames over the target, so readers never see a
// partial file.
void atomic_write(const std::string& path, std::string_view content);

}  // namespace skelssl
