#include "asdweld/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace asdweld {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bail(const std::string& msg) {
  throw std::runtime_error(msg);
}

// Shortest representation that parses back to the same double.
void print_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

double parse_double(const char*& p, const char* end) {
  double v = 0.0;
  const auto res = std::from_chars(p, end, v);
  if (res.ec != std::errc{}) bail("field csv: malformed value");
  p = res.ptr;
  return v;
}

long parse_long(const char*& p, const char* end) {
  long v = 0;
  const auto res = std::from_chars(p, end, v);
  if (res.ec != std::errc{}) bail("field csv: malformed index");
  p = res.ptr;
  return v;
}

void expect_comma(const char*& p, const char* end) {
  if (p >= end || *p != ',') bail("field csv: expected comma");
  ++p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bail("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) bail("cannot write " + path);
  out << text;
  if (!out) bail("short write to " + path);
}

}  // namespace

void write_field(const std::string& csv_path, const Grid& g, const Field& f,
                 const std::string& label) {
  if (f.nsites != g.nsites) bail("field dump: field does not fit the grid");
  std::string body = "i,j,k,l,comp,alg,value\n";
  body.reserve(body.size() +
               static_cast<std::size_t>(g.nsites) * f.stride() * 12);
  for (std::int64_t s = 0; s < g.nsites; ++s) {
    int i, j, k, l;
    g.coords(s, i, j, k, l);
    for (int c = 0; c < f.ncomp; ++c) {
      const Alg a = f.get(s, c);
      for (int t = 0; t < 3; ++t) {
        body += std::to_string(i);
        body += ',';
        body += std::to_string(j);
        body += ',';
        body += std::to_string(k);
        body += ',';
        body += std::to_string(l);
        body += ',';
        body += std::to_string(c);
        body += ',';
        body += std::to_string(t);
        body += ',';
        print_double(body, a[t]);
        body += '\n';
      }
    }
  }
  spill(csv_path, body);

  ordered_json side;
  side["version"] = 1;
  side["resolution"] = g.n;
  side["torus_size"] = g.L;
  side["components"] = f.ncomp;
  side["label"] = label;
  spill(csv_path + ".json", side.dump(2) + "\n");
}

Field read_field(const std::string& csv_path, FieldDumpInfo* info) {
  const ordered_json side = ordered_json::parse(slurp(csv_path + ".json"));
  if (side.at("version").get<int>() != 1)
    bail("field sidecar: unsupported version");
  FieldDumpInfo fi;
  fi.resolution = side.at("resolution").get<int>();
  fi.torus_size = side.at("torus_size").get<double>();
  fi.components = side.at("components").get<int>();
  fi.label = side.at("label").get<std::string>();
  if (fi.resolution <= 0 || fi.components <= 0)
    bail("field sidecar: bad dimensions");

  const Grid g(fi.resolution, fi.torus_size);
  Field f(fi.components, g.nsites);
  const std::string text = slurp(csv_path);
  const char* p = text.data();
  const char* end = p + text.size();
  // Header row.
  while (p < end && *p != '\n') ++p;
  if (p < end) ++p;
  std::int64_t rows = 0;
  while (p < end) {
    const long i = parse_long(p, end);
    expect_comma(p, end);
    const long j = parse_long(p, end);
    expect_comma(p, end);
    const long k = parse_long(p, end);
    expect_comma(p, end);
    const long l = parse_long(p, end);
    expect_comma(p, end);
    const long c = parse_long(p, end);
    expect_comma(p, end);
    const long t = parse_long(p, end);
    expect_comma(p, end);
    const double v = parse_double(p, end);
    if (p < end) {
      if (*p != '\n') bail("field csv: trailing junk on a row");
      ++p;
    }
    if (i < 0 || i >= g.n || j < 0 || j >= g.n || k < 0 || k >= g.n || l < 0 ||
        l >= g.n)
      bail("field csv: site index outside the grid");
    if (c < 0 || c >= fi.components || t < 0 || t >= 3)
      bail("field csv: component index outside the layout");
    const std::int64_t s = g.site(static_cast<int>(i), static_cast<int>(j),
                                  static_cast<int>(k), static_cast<int>(l));
    f.v[static_cast<std::size_t>(s) * f.stride() +
        static_cast<std::size_t>(3 * c + t)] = v;
    ++rows;
  }
  if (rows != g.nsites * fi.components * 3)
    bail("field csv: row count does not match the sidecar layout");
  if (info) *info = fi;
  return f;
}

std::string to_json(const SolveReport& r) {
  ordered_json j;
  j["residual"] = {{"equation", r.equation_residual},
                   {"equation_rel", r.equation_residual_rel},
                   {"normal", r.normal_residual},
                   {"dstar", r.dstar_norm}};
  j["iterations"] = {{"cg", r.cg_iterations}, {"picard", r.picard_sweeps}};
  j["norms"] = {{"b_linf", r.b_linf},
                {"b_l2p", r.b_l2p},
                {"b_lp1", r.b_lp1},
                {"sigma_lp", r.sigma_lp}};
  j["constants"] = {{"mu", r.mu},
                    {"spectral_estimate", r.spectral_estimate},
                    {"bound_ratio", r.bound_ratio}};
  return j.dump();
}

std::string to_jsonl(const DecayTrace& t) {
  std::string out;
  ordered_json head;
  head["record"] = "trace";
  head["delta0"] = t.delta0;
  head["floor"] = t.floor;
  head["target"] = t.target;
  head["converged"] = t.converged;
  head["passes"] = t.records.size();
  out += head.dump();
  out += '\n';
  for (const PassRecord& r : t.records) {
    ordered_json line;
    line["record"] = "pass";
    line["pass"] = r.pass;
    line["parity"] = r.parity;
    line["delta"] = r.delta;
    line["ratio"] = r.ratio;
    line["support_violation"] = r.support_violation;
    line["sigma_norms"] = r.sigma_norms;
    line["cg"] = r.cg_iterations;
    line["energy_drift"] = r.energy_drift;
    line["drift_max"] = r.drift_max;
    line["a_norm_max"] = r.a_norm_max;
    out += line.dump();
    out += '\n';
  }
  return out;
}

DecayTrace trace_from_jsonl(const std::string& text) {
  DecayTrace t;
  std::istringstream in(text);
  std::string line;
  bool seen_head = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const ordered_json j = ordered_json::parse(line);
    const std::string kind = j.at("record").get<std::string>();
    if (kind == "trace") {
      if (seen_head) bail("trace jsonl: duplicate header record");
      seen_head = true;
      t.delta0 = j.at("delta0").get<double>();
      t.floor = j.at("floor").get<double>();
      t.target = j.at("target").get<double>();
      t.converged = j.at("converged").get<bool>();
      expected = j.at("passes").get<std::size_t>();
    } else if (kind == "pass") {
      if (!seen_head) bail("trace jsonl: pass record before the header");
      PassRecord r;
      r.pass = j.at("pass").get<int>();
      r.parity = j.at("parity").get<int>();
      r.delta = j.at("delta").get<double>();
      r.ratio = j.at("ratio").get<double>();
      r.support_violation = j.at("support_violation").get<double>();
      r.sigma_norms = j.at("sigma_norms").get<std::vector<double>>();
      r.cg_iterations = j.at("cg").get<std::vector<int>>();
      r.energy_drift = j.at("energy_drift").get<double>();
      r.drift_max = j.at("drift_max").get<double>();
      r.a_norm_max = j.at("a_norm_max").get<double>();
      t.records.push_back(r);
    } else {
      bail("trace jsonl: unknown record kind " + kind);
    }
  }
  if (!seen_head) bail("trace jsonl: missing header record");
  if (t.records.size() != expected)
    bail("trace jsonl: pass count does not match the header");
  return t;
}

std::string to_json(const EnergyLedger& led) {
  ordered_json j;
  j["block_energy"] = led.block_energy;
  j["background_energy"] = led.background_energy;
  j["total"] = led.total;
  j["min_nonflat"] = led.min_nonflat;
  j["nonflat_count"] = led.nonflat_count;
  j["per_nonflat"] = led.per_nonflat;
  return j.dump();
}

std::string to_json(const LipschitzReport& r) {
  ordered_json j;
  j["K"] = r.K;
  j["sup_diff"] = r.sup_diff;
  j["ratio"] = r.ratio;
  j["block_diff"] = r.block_diff;
  j["path_speed"] = r.path_speed;
  j["passes"] = {r.passes[0], r.passes[1]};
  j["complete"] = r.complete;
  return j.dump();
}

std::string to_json(const CenterReport& r) {
  ordered_json j;
  j["gamma"] = r.gamma;
  j["field_diff"] = r.field_diff;
  j["observable_diff"] = r.observable_diff;
  j["passes"] = {r.passes[0], r.passes[1]};
  return j.dump();
}

std::string to_json(const RecurrenceResult& r) {
  ordered_json j;
  j["sup_alpha"] = r.sup_alpha;
  j["bound"] = r.bound;
  j["steps"] = r.steps;
  j["pass"] = r.pass;
  return j.dump();
}

}  // namespace asdweld
