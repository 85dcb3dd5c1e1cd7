#include "relcomp/persistence.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

namespace relcomp {

std::string format_double(double x) {
  require(std::isfinite(x), ErrorCode::non_finite, "cannot format a non-finite value");
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  require(res.ec == std::errc() && res.ptr == token.data() + token.size() && !token.empty(), ErrorCode::bad_token,
          "cannot parse number '" + std::string(token) + "'");
  require(std::isfinite(v), ErrorCode::bad_token, "non-finite value '" + std::string(token) + "'");
  return v;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t j = line.find(' ', i);
    const std::size_t end = j == std::string_view::npos ? line.size() : j;
    if (end > i) out.push_back(line.substr(i, end - i));
    i = end;
  }
  return out;
}

Index parse_count(std::string_view token, const char* what) {
  Index v = -1;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  require(res.ec == std::errc() && res.ptr == token.data() + token.size() && v >= 0, ErrorCode::malformed_header,
          std::string("bad ") + what + " '" + std::string(token) + "'");
  return v;
}

}  // namespace

std::string matrix_to_mat1(const Matrix& m) {
  require_finite(m, "matrix");
  std::string out = "MAT1 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out.push_back(' ');
      out += format_double(m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix matrix_from_mat1(std::string_view text) {
  const auto lines = split_lines(text);
  require(!lines.empty(), ErrorCode::malformed_header, "empty MAT1 input");
  const auto head = split_spaces(lines[0]);
  require(head.size() == 3 && head[0] == "MAT1", ErrorCode::malformed_header, "expected 'MAT1 <rows> <cols>'");
  const Index rows = parse_count(head[1], "row count");
  const Index cols = parse_count(head[2], "column count");
  require(static_cast<Index>(lines.size()) - 1 == rows, ErrorCode::count_mismatch,
          "expected " + std::to_string(rows) + " rows, found " + std::to_string(lines.size() - 1));
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto toks = split_spaces(lines[static_cast<std::size_t>(r + 1)]);
    require(static_cast<Index>(toks.size()) == cols, ErrorCode::count_mismatch,
            "row " + std::to_string(r) + " has " + std::to_string(toks.size()) + " values, expected " + std::to_string(cols));
    for (Index c = 0; c < cols; ++c) m(r, c) = parse_double(toks[static_cast<std::size_t>(c)]);
  }
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) { write_file(path, matrix_to_mat1(m)); }

Matrix load_matrix(const std::filesystem::path& path) {
  require(!path.empty(), ErrorCode::malformed_header, "empty matrix path");
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::malformed_header, "cannot read matrix file '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return matrix_from_mat1(text);
}

std::string binary_to_bvec1(const BinaryVector& v) {
  return "BVEC1 " + std::to_string(v.size()) + "\n" + v.to_string() + "\n";
}

BinaryVector binary_from_bvec1(std::string_view text) {
  const auto lines = split_lines(text);
  require(!lines.empty(), ErrorCode::malformed_header, "empty BVEC1 input");
  const auto head = split_spaces(lines[0]);
  require(head.size() == 2 && head[0] == "BVEC1", ErrorCode::malformed_header, "expected 'BVEC1 <n>'");
  const Index n = parse_count(head[1], "length");
  require(lines.size() == 2, ErrorCode::count_mismatch, "BVEC1 expects exactly one bit line");
  require(static_cast<Index>(lines[1].size()) == n, ErrorCode::count_mismatch, "bit line length differs from header");
  return BinaryVector::from_string(lines[1]);
}

void save_binary(const std::filesystem::path& path, const BinaryVector& v) { write_file(path, binary_to_bvec1(v)); }

BinaryVector load_binary(const std::filesystem::path& path) {
  require(!path.empty(), ErrorCode::malformed_header, "empty path");
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::malformed_header, "cannot read binary vector file '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return binary_from_bvec1(text);
}

std::string tree_to_json(const TreeSpec& tree) {
  nlohmann::ordered_json j;
  j["parent"] = tree.parents();
  nlohmann::ordered_json roles = nlohmann::ordered_json::array();
  for (Index i = 0; i < tree.node_count(); ++i) {
    const auto r = tree.role(i);
    if (r) roles.push_back(*r == ChildRole::left ? "left" : "right");
    else roles.push_back(nullptr);
  }
  j["role"] = roles;
  return j.dump() + "\n";
}

TreeSpec tree_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("tree JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("parent") && j["parent"].is_array(), ErrorCode::schema_violation,
          "tree JSON needs a 'parent' array");
  for (const auto& [key, value] : j.items())
    require(key == "parent" || key == "role", ErrorCode::schema_violation, "unknown tree key '" + key + "'");
  std::vector<Index> parent;
  for (const auto& p : j["parent"]) {
    require(p.is_number_integer(), ErrorCode::schema_violation, "parent entries must be integers");
    parent.push_back(p.get<Index>());
  }
  std::vector<std::optional<ChildRole>> roles;
  if (j.contains("role")) {
    require(j["role"].is_array(), ErrorCode::schema_violation, "'role' must be an array");
    for (const auto& r : j["role"]) {
      if (r.is_null()) roles.emplace_back(std::nullopt);
      else if (r == "left") roles.emplace_back(ChildRole::left);
      else if (r == "right") roles.emplace_back(ChildRole::right);
      else throw Error(ErrorCode::schema_violation, "role entries must be 'left', 'right' or null");
    }
  }
  return TreeSpec(std::move(parent), std::move(roles));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_failure, "cannot read '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    require(!ec, ErrorCode::io_failure, "cannot create directory '" + path.parent_path().string() + "'");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_failure, "cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  require(static_cast<bool>(out), ErrorCode::io_failure, "write to '" + path.string() + "' failed");
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  require(EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) == 1, ErrorCode::io_failure,
          "SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  for (auto line : split_lines(text)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace relcomp
