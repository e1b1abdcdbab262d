#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace cogboot::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);
void append_text(const std::filesystem::path& path, const std::string& content);

/// Parse failures surface as SchemaError naming the file.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace cogboot::io
