#include "emt/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emt {

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
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

double parse_cell(const std::string& cell, size_t data_row, size_t col) {
    const char* s = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        fail(ErrorCategory::Data, "unparsable cell '" + cell + "' at row " +
                                      std::to_string(data_row) + ", column " +
                                      std::to_string(col + 1));
    if (!std::isfinite(v))
        fail(ErrorCategory::Data,
             "non-finite value at row " + std::to_string(data_row));
    return v;
}

std::string meta_get(const CsvTable& t, const std::string& key) {
    auto it = t.meta.find(key);
    if (it == t.meta.end())
        fail(ErrorCategory::Schema, "missing '#" + key + "=' header");
    return it->second;
}

double meta_double(const CsvTable& t, const std::string& key) {
    const std::string s = meta_get(t, key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        fail(ErrorCategory::Schema, "malformed '#" + key + "=" + s + "'");
    return v;
}

Condition meta_condition(const CsvTable& t) {
    Condition c;
    c.weight_kg = meta_double(t, "weight_kg");
    c.movement = movement_from_name(meta_get(t, "movement"));
    if (c.weight_kg < 0) fail(ErrorCategory::Schema, "negative weight_kg");
    return c;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::MissingInput, "cannot open " + path);

    CsvTable table;
    std::string line;
    bool have_header = false;
    std::vector<double> values;
    size_t data_rows = 0;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                fail(ErrorCategory::Schema, "malformed comment header '" + line + "'");
            table.meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
            continue;
        }
        if (!have_header) {
            table.columns = split_commas(line);
            have_header = true;
            continue;
        }
        const auto cells = split_commas(line);
        ++data_rows;
        if (cells.size() != table.columns.size())
            fail(ErrorCategory::Schema,
                 "row " + std::to_string(data_rows) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(table.columns.size()));
        for (size_t c = 0; c < cells.size(); ++c)
            values.push_back(parse_cell(cells[c], data_rows, c));
    }
    if (!have_header) fail(ErrorCategory::Schema, "no header row in " + path);
    if (data_rows == 0) fail(ErrorCategory::Data, "no samples in " + path);

    table.values = Mat(data_rows, table.columns.size());
    table.values.a = std::move(values);
    return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::MissingInput, "cannot write " + path);
    for (const auto& [k, v] : table.meta) out << '#' << k << '=' << v << '\n';
    for (size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (size_t r = 0; r < table.values.rows; ++r) {
        for (size_t c = 0; c < table.values.cols; ++c)
            out << (c ? "," : "") << fmt_double(table.values.at(r, c));
        out << '\n';
    }
    if (!out) fail(ErrorCategory::Internal, "write failed for " + path);
}

EmgRecording load_emg_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.columns.size() != kNumChannels)
        fail(ErrorCategory::Schema, path + ": expected 8 channel columns, got " +
                                        std::to_string(t.columns.size()));
    EmgRecording rec;
    rec.sample_rate_hz = meta_double(t, "rate_hz");
    rec.condition = meta_condition(t);
    rec.is_rest = meta_get(t, "rest") == "true";
    rec.channels = t.columns;
    rec.samples = t.values;
    rec.validate();
    return rec;
}

void write_emg_csv(const std::string& path, const EmgRecording& rec) {
    CsvTable t;
    t.meta["rate_hz"] = fmt_double(rec.sample_rate_hz);
    t.meta["weight_kg"] = fmt_double(rec.condition.weight_kg);
    t.meta["movement"] = movement_name(rec.condition.movement);
    t.meta["rest"] = rec.is_rest ? "true" : "false";
    t.columns = rec.channels;
    t.values = rec.samples;
    write_csv(path, t);
}

MarkerTrajectory load_markers_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.columns.size() != kNumMarkers * 3)
        fail(ErrorCategory::Schema, path + ": expected 18 coordinate columns, got " +
                                        std::to_string(t.columns.size()));
    MarkerTrajectory traj;
    traj.sample_rate_hz = meta_double(t, "rate_hz");
    traj.condition = meta_condition(t);
    traj.samples = t.values.rows;
    traj.positions = t.values.a;
    traj.validate();
    return traj;
}

void write_markers_csv(const std::string& path, const MarkerTrajectory& traj) {
    CsvTable t;
    t.meta["rate_hz"] = fmt_double(traj.sample_rate_hz);
    t.meta["weight_kg"] = fmt_double(traj.condition.weight_kg);
    t.meta["movement"] = movement_name(traj.condition.movement);
    t.meta["rest"] = "false";
    static const char* axes[3] = {"x", "y", "z"};
    for (const auto& m : marker_names())
        for (const char* ax : axes) t.columns.push_back(m + "_" + ax);
    t.values = Mat(traj.samples, kNumMarkers * 3);
    t.values.a = traj.positions;
    write_csv(path, t);
}

} // namespace emt
