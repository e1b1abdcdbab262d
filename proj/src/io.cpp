#include "cogboot/io.hpp"

#include <fstream>
#include <sstream>

#include "cogboot/error.hpp"

namespace cogboot::io {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

static void write_mode(const std::filesystem::path& path, const std::string& content,
                       std::ios::openmode mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | mode);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  write_mode(path, content, std::ios::trunc);
}

void append_text(const std::filesystem::path& path, const std::string& content) {
  write_mode(path, content, std::ios::app);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  auto content = read_text(path);
  try {
    return nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace cogboot::io
