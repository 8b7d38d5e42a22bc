#pragma once

#include <string>

#include "mongegap/neural_map.hpp"

namespace mongegap {

// JSON document with a format_version field, the architecture tags and the
// flat parameter vector. Round trips bit-exactly.
void save_checkpoint(const std::string& path, const MapModel& model);
MapModel load_checkpoint(const std::string& path);

}  // namespace mongegap
