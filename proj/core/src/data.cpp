#include "evorl/data.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evorl::data {

std::string load(const std::string& relative_path, const std::filesystem::path& override_dir) {
  if (!override_dir.empty()) {
    const auto p = override_dir / relative_path;
    if (std::filesystem::exists(p)) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
  }
  const auto& files = embedded_files();
  auto it = files.find(relative_path);
  if (it == files.end()) throw std::out_of_range("no embedded data file '" + relative_path + "'");
  return std::string(it->second);
}

}  // namespace evorl::data
