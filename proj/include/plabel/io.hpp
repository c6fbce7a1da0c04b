#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plabel/core.hpp"

namespace plabel {

/// Plain comma-separated table: header row, no quoting. Each row keeps the
/// 1-based line number it came from for error messages.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;

    // column position, or nullopt
    std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

double parse_double(const std::string& field, std::size_t line);
long long parse_int(const std::string& field, std::size_t line);

/// Dataset interchange: z0..z{d-1} (or img_path), hard_label, optional p0..p{K-1}.
/// img_path entries are resolved relative to the CSV's directory. K comes from
/// the p columns when present, else num_classes, else max label + 1 (at least 2).
Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes = std::nullopt);

/// Writes the CSV; image datasets also get one PGM per instance under
/// `<csv dir>/images/`.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

// 8-bit binary PGM (P5)
ImageGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const ImageGrid& image, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace plabel
