#pragma once

#include <array>
#include <string>
#include <vector>

#include "clbayes/betabin.hpp"

namespace clbayes {

// Shortest round-trip formatting for doubles; integers for integral values.
std::string format_double(double x);

// Strict full-token numeric parsing.
double parse_double(const std::string& token, const std::string& what);
long long parse_int(const std::string& token, const std::string& what);

// Dataset CSV with header `study,n1,y1,n2,y2`: one row per study, counts per
// group.  Parse failures carry 1-based line numbers.
MetaDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const MetaDataset& data);

// Size table CSV with header `study,n1,n2`.
std::vector<std::array<int, 2>> read_size_table_csv(const std::string& path);
void write_size_table_csv(const std::string& path, const std::vector<std::array<int, 2>>& sizes);

// Shared low-level helpers.
std::vector<std::string> split_fields(const std::string& line);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace clbayes
