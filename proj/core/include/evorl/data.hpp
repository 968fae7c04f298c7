#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace evorl::data {

/// Files under core/data compiled into the library, keyed by relative path
/// (e.g. "templates/macro.txt").
const std::map<std::string, std::string_view>& embedded_files();

/// Returns the contents of a data file. When `override_dir` is non-empty and
/// contains the file, the on-disk copy wins; otherwise the embedded copy is used.
std::string load(const std::string& relative_path, const std::filesystem::path& override_dir = {});

}  // namespace evorl::data
