#include "dsgd/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsgd {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path fp(path);
  if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::string& path) {
  return Json::parse(read_text_file(path));
}

namespace {

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Json matrix_to_json_row_major(const Matrix& m) {
  Json arr = Json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

Matrix matrix_from_json_row_major(const Json& j, int rows, int cols) {
  if (static_cast<long>(j.size()) != static_cast<long>(rows) * cols)
    throw std::invalid_argument("bundle: matrix size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[k++].get<double>();
  return m;
}

}  // namespace

Json problem_to_json(const ProblemInstance& p) {
  Json j;
  j["dimension"] = p.dimension;
  j["num_workers"] = p.num_workers;
  j["seed"] = p.seed;
  j["scale_rows"] = p.scale_rows;
  j["targets"] = {{"L", p.targets.L}, {"zeta", p.targets.zeta}, {"delta", p.targets.delta}};
  j["achieved"] = {
      {"L", p.achieved.L}, {"zeta", p.achieved.zeta}, {"delta", p.achieved.delta}};
  Json workers = Json::array();
  for (const auto& lo : p.locals) {
    Json w;
    w["rows"] = lo.data_matrix.rows();
    w["data_matrix"] = matrix_to_json_row_major(lo.data_matrix);
    w["targets"] = vector_to_json(lo.targets);
    w["anchor"] = vector_to_json(lo.anchor);
    w["reg_weight"] = lo.reg_weight;
    workers.push_back(std::move(w));
  }
  j["workers"] = std::move(workers);
  return j;
}

ProblemInstance problem_from_json(const Json& j) {
  ProblemInstance p;
  p.dimension = j.at("dimension").get<int>();
  p.num_workers = j.at("num_workers").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.scale_rows = j.at("scale_rows").get<double>();
  p.targets = {j.at("targets").at("L").get<double>(),
               j.at("targets").at("zeta").get<double>(),
               j.at("targets").at("delta").get<double>()};
  p.achieved = {j.at("achieved").at("L").get<double>(),
                j.at("achieved").at("zeta").get<double>(),
                j.at("achieved").at("delta").get<double>()};
  for (const auto& w : j.at("workers")) {
    LocalObjective lo;
    const int rows = w.at("rows").get<int>();
    lo.data_matrix = matrix_from_json_row_major(w.at("data_matrix"), rows, p.dimension);
    lo.targets = vector_from_json(w.at("targets"));
    lo.anchor = vector_from_json(w.at("anchor"));
    lo.reg_weight = w.at("reg_weight").get<double>();
    p.locals.push_back(std::move(lo));
  }
  p.validate();
  return p;
}

void save_problem_bundle(const ProblemInstance& p, const std::string& path) {
  write_json_file(path, problem_to_json(p));
}

ProblemInstance load_problem_bundle(const std::string& path) {
  return problem_from_json(read_json_file(path));
}

Json generation_spec_to_json(const GenerationSpec& spec) {
  Json j;
  j["dimension"] = spec.dimension;
  j["num_workers"] = spec.num_workers;
  j["seed"] = spec.seed;
  j["target_L"] = spec.target_L;
  j["target_zeta"] = spec.target_zeta;
  j["target_delta"] = spec.target_delta;
  j["reg_weight"] = spec.reg_weight;
  j["calibration_tolerance"] = spec.calibration_tolerance;
  j["calibration_max_iters"] = spec.calibration_max_iters;
  return j;
}

GenerationSpec generation_spec_from_json(const Json& j) {
  GenerationSpec spec;
  spec.dimension = j.at("dimension").get<int>();
  spec.num_workers = j.at("num_workers").get<int>();
  spec.seed = j.value("seed", 0ULL);
  spec.target_L = j.value("target_L", 1.0);
  spec.target_zeta = j.value("target_zeta", 0.0);
  spec.target_delta = j.value("target_delta", 0.0);
  spec.reg_weight = j.value("reg_weight", 0.0);
  spec.calibration_tolerance = j.value("calibration_tolerance", 0.05);
  spec.calibration_max_iters = j.value("calibration_max_iters", 60);
  spec.validate();
  return spec;
}

Json conditioning_report_to_json(const ConditioningReport& r) {
  Json j;
  j["L"] = r.L;
  j["sigma"] = r.sigma;
  j["zeta"] = r.zeta;
  j["zeta_bar"] = r.zeta_bar;
  j["delta"] = r.delta;
  j["delta_bar"] = r.delta_bar;
  j["rho"] = r.rho;
  j["M"] = r.M;
  j["Delta"] = r.Delta;
  j["sample_points"] = r.sample_points;
  j["sample_radius"] = r.sample_radius;
  j["fstar_estimate"] = r.fstar_estimate;
  j["seed"] = r.seed;
  j["approximate"] = r.approximate;
  return j;
}

void export_trace_csv(const Trace& trace, const std::string& path) {
  std::string out = "t,round,grad_norm_sq,f_value,consensus_sq\n";
  for (const auto& rec : trace.records) {
    out += std::to_string(rec.t);
    out += ',';
    out += std::to_string(rec.round);
    out += ',';
    out += format_double(rec.grad_norm_sq);
    out += ',';
    out += format_double(rec.f_value);
    out += ',';
    out += format_double(rec.consensus_sq);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "t,round,grad_norm_sq,f_value,consensus_sq")
    throw std::runtime_error("trace csv: bad header in " + path);
  std::vector<TraceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRecord rec;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf,%lf", &rec.t, &rec.round,
                    &rec.grad_norm_sq, &rec.f_value, &rec.consensus_sq) != 5)
      throw std::runtime_error("trace csv: bad row in " + path);
    records.push_back(rec);
  }
  return records;
}

Json trace_metadata_to_json(const Trace& trace) {
  Json j;
  j["algorithm"] = algorithm_name(trace.algorithm);
  j["eta"] = trace.eta;
  j["tau"] = trace.tau;
  j["rounds"] = trace.rounds;
  j["sigma"] = trace.sigma;
  j["oracle_seed"] = trace.oracle_seed;
  j["record_every"] = trace.record_every;
  j["total_queries"] = trace.total_queries;
  j["diverged"] = trace.diverged;
  j["final_iterate"] = vector_to_json(trace.final_iterate);
  return j;
}

void export_summary_json(const Json& summary, const std::string& path) {
  write_json_file(path, summary);
}

}  // namespace dsgd
