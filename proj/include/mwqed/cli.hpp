#pragma once

#include <complex>
#include <json.hpp>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwqed::cli {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;
inline constexpr int exit_ok = 0;
inline constexpr int exit_physics = 1;
inline constexpr int exit_config = 2;

// Schema violation; pointer is the JSON pointer of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& pointer, const std::string& msg)
        : std::runtime_error(pointer + ": " + msg), pointer_(pointer) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

const std::vector<std::string>& modes();

// Schema-validated config with every default materialized. A manifest is accepted too.
Json load_config(const std::string& path, const std::string& mode);
Json resolve_config(const Json& raw, const std::string& mode);

// CSV with a header row, fixed significant digits and '\n' endings.
std::string format_number(double x, int digits = 12);

class Csv {
public:
    explicit Csv(std::vector<std::string> header, int digits = 12);
    void row(const std::vector<double>& values);
    // mixed rows: strings are written verbatim
    void row_text(const std::vector<std::string>& cells);
    std::string str() const { return out_; }
    int digits() const { return digits_; }

private:
    size_t columns_;
    int digits_;
    std::string out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    int column(const std::string& name) const;  // -1 if absent
    std::vector<double> values(const std::string& name) const;
};
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

std::string sha256_hex(const std::string& bytes);

// Output files staged in memory, then written with temp-file + rename.
class OutputSet {
public:
    void add(const std::string& name, std::string bytes);
    bool empty() const { return files_.empty(); }
    const std::map<std::string, std::string>& files() const { return files_; }
    // writes every staged file and returns name -> sha256
    std::map<std::string, std::string> commit(const std::string& dir) const;

private:
    std::map<std::string, std::string> files_;
};

void write_atomic(const std::string& path, const std::string& bytes);

// raster output

struct Image {
    int width = 0, height = 0;
    std::vector<unsigned char> rgb;  // row-major, top row first
    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
};

enum class Normalization { global, per_row };

bool png_available();
// empty string when libpng is missing
std::string encode_png(const Image& img);

// values[row][col]; row 0 at the top. Scale 0..max, fixed colormap.
Image heatmap(const std::vector<std::vector<double>>& values, Normalization norm, int cell_w = 2, int cell_h = 2);
// dark overlay pixel at (col, row) in data coordinates
void overlay_point(Image& img, double col, double row, int cell_w, int cell_h);
Image lineout(const std::vector<double>& x, const std::vector<std::vector<double>>& ys, int width = 640,
              int height = 360);
// phase as hue, log modulus as brightness
Image domain_coloring(const std::vector<std::vector<std::complex<double>>>& values);

struct RunOptions {
    std::string subcommand;
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    bool figures = true;
};

// Returns the process exit code. Messages go to stderr, summaries to stdout.
int run(const RunOptions& opt);

std::string code_version();

}  // namespace mwqed::cli
