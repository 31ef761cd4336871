#pragma once

#include <map>
#include <string>
#include <vector>

#include "emt/linalg.hpp"
#include "emt/types.hpp"

namespace emt {

// Shortest representation that round-trips the exact double value.
std::string fmt_double(double v);

struct CsvTable {
    std::map<std::string, std::string> meta; // '#key=value' header block
    std::vector<std::string> columns;
    Mat values;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

EmgRecording load_emg_csv(const std::string& path);
void write_emg_csv(const std::string& path, const EmgRecording& rec);

MarkerTrajectory load_markers_csv(const std::string& path);
void write_markers_csv(const std::string& path, const MarkerTrajectory& traj);

} // namespace emt
