#include "cycleqd/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include "cycleqd/error.hpp"

namespace cycleqd {

using nlohmann::json;

namespace {

json entry_json(const Entry& e) {
  return {{"name", e.name}, {"shape", e.tensor.shape()}, {"values", e.tensor.values()}};
}

Entry entry_from_json(const json& j) {
  try {
    auto name = j.at("name").get<std::string>();
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto values = j.at("values").get<std::vector<double>>();
    if (shape.size() == 1) {
      if (values.size() != shape[0]) throw InvalidValue("entry '" + name + "': shape mismatch");
      return {std::move(name), Tensor::vector(std::move(values))};
    }
    if (shape.size() == 2) {
      return {std::move(name), Tensor::matrix(shape[0], shape[1], std::move(values))};
    }
    throw InvalidValue("entry '" + name + "': tensors must have rank 1 or 2");
  } catch (const json::exception& e) {
    throw InvalidValue(std::string("malformed parameter entry: ") + e.what());
  }
}

}  // namespace

json to_json(const ParameterSet& p) {
  json entries = json::array();
  for (const auto& e : p.entries()) entries.push_back(entry_json(e));
  return {{"entries", entries}};
}

ParameterSet parameter_set_from_json(const json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array()) {
    throw InvalidValue("parameter set JSON needs an \"entries\" list");
  }
  std::vector<Entry> entries;
  for (const auto& e : j.at("entries")) entries.push_back(entry_from_json(e));
  return ParameterSet(std::move(entries));
}

json to_json(const TaskVector& tv) {
  json j = to_json(tv.deltas());
  j["base_id"] = tv.base_id();
  if (tv.has_residual()) {
    json residual = json::object();
    for (std::size_t i = 0; i < tv.entries().size(); ++i) {
      const auto r = tv.residual(i);
      if (!r.empty()) residual[tv.entries()[i].name] = std::vector<double>(r.begin(), r.end());
    }
    j["residual"] = residual;
  }
  return j;
}

TaskVector task_vector_from_json(const json& j) {
  ParameterSet deltas = parameter_set_from_json(j);
  if (!j.contains("base_id") || !j.at("base_id").is_string()) {
    throw InvalidValue("task vector JSON needs a \"base_id\" string");
  }
  auto base_id = j.at("base_id").get<std::string>();
  if (!j.contains("residual")) return TaskVector(std::move(deltas), std::move(base_id));
  const auto& r = j.at("residual");
  if (!r.is_object()) throw InvalidValue("task vector residual must be an object");
  std::vector<std::vector<double>> residual(deltas.size());
  for (const auto& [name, values] : r.items()) {
    std::size_t index = deltas.size();
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (deltas[i].name == name) index = i;
    }
    if (index == deltas.size()) throw InvalidValue("residual names unknown entry '" + name + "'");
    try {
      residual[index] = values.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw InvalidValue("residual for '" + name + "' must be a list of numbers");
    }
  }
  return TaskVector(std::move(deltas), std::move(base_id), std::move(residual));
}

json to_json(const BinSpec& spec) {
  json out = json::array();
  for (const auto& t : spec.tasks) {
    out.push_back({{"lower", t.lower}, {"upper", t.upper}, {"bins", t.bins}});
  }
  return out;
}

BinSpec bin_spec_from_json(const json& j) {
  BinSpec spec;
  try {
    for (const auto& t : j) {
      spec.tasks.push_back({t.at("lower").get<double>(), t.at("upper").get<double>(),
                            t.at("bins").get<int>()});
    }
  } catch (const json::exception& e) {
    throw InvalidValue(std::string("malformed bin spec: ") + e.what());
  }
  return spec;
}

json archive_to_json(const Archive& archive, int generation, const ExternalPath& external) {
  json cells = json::array();
  for (const auto& [cell, g] : archive.occupied()) {
    json c = {{"cell", cell},
              {"coordinates", archive.coordinates(cell)},
              {"id", g.id},
              {"birth_generation", g.birth_generation},
              {"fitness", g.fitness}};
    if (g.tv->deltas().element_count() < kInlineScalarLimit || !external) {
      c["task_vector"] = to_json(*g.tv);
    } else {
      c["task_vector_file"] = external(g);
    }
    cells.push_back(std::move(c));
  }
  return {{"generation", generation},
          {"quality_task", archive.quality_task()},
          {"bc_tasks", archive.bc_tasks()},
          {"bins", to_json(archive.spec())},
          {"lattice_size", archive.lattice_size()},
          {"cells", cells}};
}

Archive archive_from_json(const json& j, const ExternalLoad& load) {
  try {
    Archive archive(j.at("quality_task").get<int>(), bin_spec_from_json(j.at("bins")));
    for (const auto& c : j.at("cells")) {
      Genome g;
      g.id = c.at("id").get<std::uint64_t>();
      g.birth_generation = c.at("birth_generation").get<int>();
      g.fitness = c.at("fitness").get<std::vector<double>>();
      if (c.contains("task_vector")) {
        g.tv = std::make_shared<const TaskVector>(task_vector_from_json(c.at("task_vector")));
      } else {
        if (!load) throw InvalidValue("snapshot references an external task vector");
        g.tv = std::make_shared<const TaskVector>(load(c.at("task_vector_file").get<std::string>()));
      }
      const auto recorded = c.at("cell").get<std::size_t>();
      if (archive.cell_of(g.fitness) != recorded) {
        throw InvalidValue("genome " + std::to_string(g.id) + " is recorded in cell " +
                           std::to_string(recorded) + " but bins to cell " +
                           std::to_string(archive.cell_of(g.fitness)));
      }
      if (archive.update(g) != Placement::inserted) {
        throw InvalidValue("snapshot holds two genomes in cell " + std::to_string(recorded));
      }
    }
    return archive;
  } catch (const json::exception& e) {
    throw InvalidValue(std::string("malformed archive snapshot: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidValue("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidValue(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace cycleqd
