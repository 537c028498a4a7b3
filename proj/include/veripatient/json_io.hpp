#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace veripatient::io {

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Write-temp-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

/// Canonical serialization used for every persisted artifact: 2-space
/// indent, sorted keys (nlohmann's object order), trailing newline.
std::string canonical_dump(const nlohmann::json& value);

} // namespace veripatient::io
