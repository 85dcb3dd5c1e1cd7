#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "relcomp/binding.hpp"
#include "relcomp/tree.hpp"
#include "relcomp/types.hpp"

namespace relcomp {

// Shortest decimal that parses back to the same double ("0.1", "-0", "1e-300").
std::string format_double(double x);
// Strict full-token parse; throws bad-token.
double parse_double(std::string_view token);

// MAT1 text: "MAT1 <rows> <cols>\n" then one line per row of space
// separated values. Non-finite values are rejected.
std::string matrix_to_mat1(const Matrix& m);
Matrix matrix_from_mat1(std::string_view text);
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

// BVEC1 text: "BVEC1 <n>\n<n characters of 0/1>\n".
std::string binary_to_bvec1(const BinaryVector& v);
BinaryVector binary_from_bvec1(std::string_view text);
void save_binary(const std::filesystem::path& path, const BinaryVector& v);
BinaryVector load_binary(const std::filesystem::path& path);

// {"parent": [...], "role": ["left" | "right" | null, ...]}; payloads are
// not part of the structure file.
std::string tree_to_json(const TreeSpec& tree);
TreeSpec tree_from_json(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Minimal CSV reader for the files this project writes (no quoting).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace relcomp
