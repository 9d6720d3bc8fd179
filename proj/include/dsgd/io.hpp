#ifndef DSGD_IO_HPP
#define DSGD_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "dsgd/algorithms.hpp"
#include "dsgd/conditioning.hpp"
#include "dsgd/problem.hpp"

namespace dsgd {

using Json = nlohmann::ordered_json;

/// Pinned decimal rendering (17 significant digits) used by every CSV
/// artifact, so byte-level comparisons of reruns are meaningful.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// Problem bundles: everything needed to reconstruct the instance exactly.
Json problem_to_json(const ProblemInstance& p);
ProblemInstance problem_from_json(const Json& j);
void save_problem_bundle(const ProblemInstance& p, const std::string& path);
ProblemInstance load_problem_bundle(const std::string& path);

Json generation_spec_to_json(const GenerationSpec& spec);
GenerationSpec generation_spec_from_json(const Json& j);

Json conditioning_report_to_json(const ConditioningReport& r);

// Trace CSV: header `t,round,grad_norm_sq,f_value,consensus_sq`, one row
// per recorded iteration, plus a JSON sidecar with the run metadata.
void export_trace_csv(const Trace& trace, const std::string& path);
std::vector<TraceRecord> read_trace_csv(const std::string& path);
Json trace_metadata_to_json(const Trace& trace);

void export_summary_json(const Json& summary, const std::string& path);

}  // namespace dsgd

#endif
