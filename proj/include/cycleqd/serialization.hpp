#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "cycleqd/archive.hpp"
#include "cycleqd/param_set.hpp"

namespace cycleqd {

// {"entries": [{"name", "shape", "values"}, ...]} with row-major values.
// Doubles are written in shortest round-trip form, so reading back is
// bit-exact.
nlohmann::json to_json(const ParameterSet& p);
ParameterSet parameter_set_from_json(const nlohmann::json& j);

// ParameterSet layout plus "base_id" and, when present, "residual" as a
// map from entry name to its low-order values.
nlohmann::json to_json(const TaskVector& tv);
TaskVector task_vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BinSpec& spec);
BinSpec bin_spec_from_json(const nlohmann::json& j);

// Task vectors with fewer scalars than this are inlined in snapshots.
inline constexpr std::size_t kInlineScalarLimit = 100000;

// Where the task vector of an oversized genome is stored, relative to the
// snapshot file; the caller writes the file.
using ExternalPath = std::function<std::string(const Genome&)>;
// Loads an externally stored task vector by its recorded path.
using ExternalLoad = std::function<TaskVector(const std::string&)>;

// {"generation", "quality_task", "bins", "lattice_size", "cells": [{"cell",
// "coordinates", "id", "birth_generation", "fitness", "task_vector" |
// "task_vector_file"}]}.
nlohmann::json archive_to_json(const Archive& archive, int generation,
                               const ExternalPath& external = {});
// Rebuilds an archive and checks that every recorded cell matches the
// binning of its genome.
Archive archive_from_json(const nlohmann::json& j, const ExternalLoad& load = {});

// %.17g, which round-trips every double.
std::string format_double(double v);

nlohmann::json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; parent directories are created.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cycleqd
