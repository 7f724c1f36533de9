#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mwqed/cli.hpp"

namespace fs = std::filesystem;

namespace mwqed::cli {

std::string format_number(double x, int digits) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // no negative zero
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

Csv::Csv(std::vector<std::string> header, int digits) : columns_(header.size()), digits_(digits) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out_ += ',';
        out_ += header[i];
    }
    out_ += '\n';
}

void Csv::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::logic_error("csv row width does not match header");
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out_ += ',';
        out_ += format_number(values[i], digits_);
    }
    out_ += '\n';
}

void Csv::row_text(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row width does not match header");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
}

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> CsvTable::values(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw ConfigError("/fit", "column '" + name + "' not found in input");
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r[c]);
    return v;
}

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    if (b < e && *b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) return std::nan("");
    return v;
}
}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') continue;
        auto cells = split(line);
        if (first) {
            t.header = cells;
            first = false;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError("/fit/input", "ragged CSV row with " + std::to_string(cells.size()) + " cells");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c));
        t.rows.push_back(std::move(row));
    }
    if (first) throw ConfigError("/fit/input", "empty CSV");
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("/fit/input", "cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void write_atomic(const std::string& path, const std::string& bytes) {
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, target);
}

void OutputSet::add(const std::string& name, std::string bytes) { files_[name] = std::move(bytes); }

std::map<std::string, std::string> OutputSet::commit(const std::string& dir) const {
    fs::create_directories(dir);
    std::map<std::string, std::string> digests;
    for (const auto& [name, bytes] : files_) {
        write_atomic((fs::path(dir) / name).string(), bytes);
        digests[name] = sha256_hex(bytes);
    }
    return digests;
}

}  // namespace mwqed::cli
