#include "plabel/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "plabel/error.hpp"
#include "plabel/format.hpp"

namespace plabel {

namespace fs = std::filesystem;

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        auto first = f.find_first_not_of(" \t");
        auto last = f.find_last_not_of(" \t");
        f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
    }
    return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        table.rows.push_back(std::move(fields));
        table.lines.push_back(lineno);
    }
    if (!have_header) throw ParseError("missing header row", 1);
    return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text_file(path)); }

double parse_double(const std::string& field, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty())
        throw ParseError("cannot parse number '" + field + "'", line);
    return v;
}

long long parse_int(const std::string& field, std::size_t line) {
    long long v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty())
        throw ParseError("cannot parse integer '" + field + "'", line);
    return v;
}

Dataset read_dataset_csv(const fs::path& path, std::optional<std::size_t> num_classes) {
    const CsvTable t = read_csv(path);
    const auto label_col = t.column("hard_label");
    if (!label_col) throw ParseError("missing 'hard_label' column", 1);
    const auto img_col = t.column("img_path");

    std::vector<std::size_t> z_cols, p_cols;
    for (std::size_t j = 0;; ++j) {
        auto c = t.column("z" + std::to_string(j));
        if (!c) break;
        z_cols.push_back(*c);
    }
    for (std::size_t j = 0;; ++j) {
        auto c = t.column("p" + std::to_string(j));
        if (!c) break;
        p_cols.push_back(*c);
    }
    if (img_col && !z_cols.empty()) throw ParseError("both img_path and z columns present", 1);
    if (!img_col && z_cols.empty()) throw ParseError("no feature columns (z0..) or img_path column", 1);

    std::vector<std::size_t> labels;
    std::size_t max_label = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long long y = parse_int(t.rows[r][*label_col], t.lines[r]);
        if (y < 0) throw ParseError("negative hard_label", t.lines[r]);
        labels.push_back(static_cast<std::size_t>(y));
        max_label = std::max(max_label, labels.back());
    }
    std::size_t k = !p_cols.empty() ? p_cols.size() : num_classes.value_or(std::max<std::size_t>(2, max_label + 1));
    if (num_classes && *num_classes != k) throw ParseError("soft-label columns disagree with the class count", 1);
    for (std::size_t r = 0; r < labels.size(); ++r)
        if (labels[r] >= k) throw ParseError("hard_label out of range", t.lines[r]);

    std::optional<std::vector<ClassDistribution>> soft;
    if (!p_cols.empty()) {
        soft.emplace();
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            std::vector<double> p;
            for (std::size_t c : p_cols) p.push_back(parse_double(t.rows[r][c], t.lines[r]));
            try {
                soft->emplace_back(std::move(p));
            } catch (const ArgumentError& e) {
                throw ParseError(e.what(), t.lines[r]);
            }
        }
    }

    Inputs inputs;
    if (img_col) {
        std::vector<ImageGrid> images;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            fs::path img = t.rows[r][*img_col];
            if (img.is_relative()) img = path.parent_path() / img;
            images.push_back(read_pgm(img));
        }
        inputs = std::move(images);
    } else {
        std::vector<FeatureVector> feats;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            std::vector<double> z;
            for (std::size_t c : z_cols) z.push_back(parse_double(t.rows[r][c], t.lines[r]));
            try {
                feats.emplace_back(std::move(z));
            } catch (const ArgumentError& e) {
                throw ParseError(e.what(), t.lines[r]);
            }
        }
        inputs = std::move(feats);
    }
    return Dataset(std::move(inputs), std::move(labels), k, std::move(soft));
}

void write_dataset_csv(const Dataset& data, const fs::path& path) {
    std::ostringstream out;
    const std::size_t k = data.num_classes();
    std::size_t d = 0;
    if (data.has_images()) {
        out << "img_path";
        fs::create_directories(path.parent_path() / "images");
    } else {
        d = data.empty() ? 0 : data.features().front().size();
        for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'z' << j;
    }
    out << ",hard_label";
    if (data.has_soft_labels())
        for (std::size_t c = 0; c < k; ++c) out << ",p" << c;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.has_images()) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%05zu.pgm", i);
            const fs::path rel = fs::path("images") / name;
            write_pgm(data.images()[i], path.parent_path() / rel);
            out << rel.generic_string();
        } else {
            const auto& f = data.features()[i];
            for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << format_number(f[j]);
        }
        out << ',' << data.hard_labels()[i];
        if (data.has_soft_labels())
            for (std::size_t c = 0; c < k; ++c) out << ',' << format_number(data.soft_labels()[i][c]);
        out << '\n';
    }
    write_text_file(path, out.str());
}

ImageGrid read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    auto token = [&]() {
        std::string tok;
        char ch;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(ch);
        }
        return tok;
    };
    if (token() != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stoul(token());
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PGM header");
    }
    if (maxval == 0 || maxval > 255) throw IoError(path.string() + ": only 8-bit PGM is supported");
    std::vector<unsigned char> raw(w * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw IoError(path.string() + ": truncated PGM data");
    std::vector<double> px(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        px[i] = std::min(1.0, static_cast<double>(raw[i]) / static_cast<double>(maxval));
    return ImageGrid(h, w, std::move(px));
}

void write_pgm(const ImageGrid& image, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> raw(image.pixels().size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<unsigned char>(std::lround(image.pixels()[i] * 255.0));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

void write_text_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << contents;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace plabel
