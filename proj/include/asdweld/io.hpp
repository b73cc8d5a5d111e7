#pragma once

#include <string>

#include "asdweld/elliptic.hpp"
#include "asdweld/grid.hpp"
#include "asdweld/moduli.hpp"
#include "asdweld/welding.hpp"

namespace asdweld {

// Field dumps: CSV rows (i,j,k,l,comp,alg,value) under a fixed header row,
// plus a JSON sidecar at <csv_path>.json describing the chart and the
// component layout. Values print in shortest round-trip form, so a
// write/read cycle reproduces every bit.
struct FieldDumpInfo {
  int resolution = 0;
  double torus_size = 0.0;
  int components = 0;
  std::string label;
};

void write_field(const std::string& csv_path, const Grid& g, const Field& f,
                 const std::string& label);

/** Throws std::runtime_error on malformed input or a CSV/sidecar mismatch. */
Field read_field(const std::string& csv_path, FieldDumpInfo* info = nullptr);

/** One JSON object; keys: residual, iterations, norms, constants. */
std::string to_json(const SolveReport& r);

/** JSON lines: one trace header record, then one record per pass. */
std::string to_jsonl(const DecayTrace& t);
DecayTrace trace_from_jsonl(const std::string& text);

std::string to_json(const EnergyLedger& led);
std::string to_json(const LipschitzReport& r);
std::string to_json(const CenterReport& r);
std::string to_json(const RecurrenceResult& r);

}  // namespace asdweld
