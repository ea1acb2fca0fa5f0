#pragma once

#include <iosfwd>
#include <string>

#include "tenrank/approx.hpp"

namespace tenrank {

// Tensor file format: {"shape":[n1,n2,n3],"data":[a_000, a_001, ...]} with
// the data array in row-major linear order. The parser rejects shape/data
// length mismatches and non-finite entries.
DenseTensor read_tensor_json(std::istream& in);
DenseTensor read_tensor_file(const std::string& path);
void write_tensor_json(std::ostream& out, const DenseTensor& t);
void write_tensor_file(const std::string& path, const DenseTensor& t);

// Candidate file format: {"first":[[u],[v],[w]],"second":[[u],[v],[w]]}.
Rank2Candidate read_candidate_json(std::istream& in);
Rank2Candidate read_candidate_file(const std::string& path);
void write_candidate_json(std::ostream& out, const Rank2Candidate& c);
void write_candidate_file(const std::string& path, const Rank2Candidate& c);

// Header-first CSV with one row per sweep or improvement step.
void write_trace_csv(std::ostream& out, const AlsTrace& trace);
void write_trace_file(const std::string& path, const AlsTrace& trace);

} // namespace tenrank
