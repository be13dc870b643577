#include "skelssl/io_util.hpp"

#include <filesystem>
#include <fstream>
#include <system_error>

#include "skelssl/errors.hpp"

namespace skelssl {

void atomic_write(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    const std::string why = ec.message();
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot replace " + path + ": " + why);
  }
}

}  // namespace skelssl
