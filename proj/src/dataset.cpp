#include "permnet/dataset.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>

namespace permnet {

using nlohmann::json;

AtomicFile::AtomicFile(std::string path)
    : path_(std::move(path)), staging_(path_ + ".partial") {
  out_.open(staging_, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open " + staging_ + " for writing");
}

AtomicFile::~AtomicFile() {
  if (committed_) return;
  out_.close();
  std::error_code ec;
  std::filesystem::remove(staging_, ec);
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + staging_);
  out_.close();
  std::filesystem::rename(staging_, path_);
  committed_ = true;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json imatrix_to_json(const Eigen::MatrixXi& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename M>
M json_to_matrix(const json& j, Index rows, Index cols, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw FormatError(std::string("bad row count for ") + what);
  }
  M m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw FormatError(std::string("bad column count for ") + what);
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<typename M::Scalar>();
    }
  }
  return m;
}

json header_json(const RecordHeader& h) {
  return json{{"type", "header"},     {"kind", h.kind}, {"version", h.version},
              {"config_hash", h.config_hash}, {"seed", h.seed}};
}

// Opens `path`, parses the header line, checks kind and version.
std::ifstream open_records(const std::string& path, const std::string& kind,
                           RecordHeader* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(path + ":1: " + e.what());
  }
  if (h.value("type", "") != "header" || h.value("kind", "") != kind) {
    throw FormatError(path + ":1: expected a '" + kind + "' header record");
  }
  if (h.value("version", -1) != kDatasetVersion) {
    throw FormatError(path + ":1: unsupported version");
  }
  if (out) {
    out->kind = kind;
    out->version = kDatasetVersion;
    out->config_hash = h.value("config_hash", "");
    out->seed = h.value("seed", std::uint64_t{0});
  }
  return in;
}

template <typename F>
void for_each_record(std::ifstream& in, const std::string& path, const std::string& type,
                     F&& fn) {
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.value("type", "") != type) throw FormatError("expected a '" + type + "' record");
      fn(j);
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

void write_scenarios(const std::string& path, const RecordHeader& header,
                     const std::vector<Scenario>& scenarios) {
  AtomicFile file(path);
  RecordHeader h = header;
  h.kind = "scenarios";
  file.stream() << header_json(h).dump() << '\n';
  for (const auto& sc : scenarios) {
    json j{{"type", "scenario"},
           {"seed", sc.seed},
           {"num_users", sc.num_users},
           {"k_max", sc.k_max},
           {"frames", sc.frames},
           {"num_bs", sc.num_bs},
           {"file_bits", std::vector<double>(sc.file_bits.begin(), sc.file_bits.end())},
           {"gain", matrix_to_json(sc.gain)},
           {"bandwidth", matrix_to_json(sc.bandwidth)},
           {"association", imatrix_to_json(sc.association)},
           {"rate", matrix_to_json(sc.rate)},
           {"norm_rate", matrix_to_json(sc.norm_rate)}};
    file.stream() << j.dump() << '\n';
  }
  file.commit();
}

std::vector<Scenario> read_scenarios(const std::string& path, RecordHeader* header) {
  auto in = open_records(path, "scenarios", header);
  std::vector<Scenario> out;
  for_each_record(in, path, "scenario", [&](const json& j) {
    Scenario sc;
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.num_users = j.at("num_users").get<int>();
    sc.k_max = j.at("k_max").get<int>();
    sc.frames = j.at("frames").get<int>();
    sc.num_bs = j.at("num_bs").get<int>();
    if (sc.k_max < 1 || sc.frames < 1 || sc.num_bs < 1) throw FormatError("bad dimensions");
    const auto bits = j.at("file_bits").get<std::vector<double>>();
    if (static_cast<int>(bits.size()) != sc.k_max) throw FormatError("bad file_bits length");
    sc.file_bits = Eigen::Map<const Vector>(bits.data(), sc.k_max);
    sc.gain = json_to_matrix<Matrix>(j.at("gain"), sc.k_max, sc.frames, "gain");
    sc.bandwidth = json_to_matrix<Matrix>(j.at("bandwidth"), sc.num_bs, sc.frames, "bandwidth");
    sc.association = json_to_matrix<Eigen::MatrixXi>(j.at("association"), sc.k_max,
                                                     sc.frames, "association");
    sc.rate = json_to_matrix<Matrix>(j.at("rate"), sc.k_max, sc.frames, "rate");
    sc.norm_rate = json_to_matrix<Matrix>(j.at("norm_rate"), sc.k_max, sc.frames, "norm_rate");
    sc.masks.assign(static_cast<std::size_t>(sc.num_bs), Matrix::Zero(sc.k_max, sc.frames));
    for (int k = 0; k < sc.k_max; ++k) {
      for (int t = 0; t < sc.frames; ++t) {
        const int bs = sc.association(k, t);
        if (bs < -1 || bs >= sc.num_bs) throw FormatError("association out of range");
        if (bs >= 0) sc.masks[static_cast<std::size_t>(bs)](k, t) = 1.0;
      }
    }
    sc.validate();
    out.push_back(std::move(sc));
  });
  return out;
}

void write_plans(const std::string& path, const RecordHeader& header,
                 const std::vector<PlanSolution>& plans) {
  AtomicFile file(path);
  RecordHeader h = header;
  h.kind = "plans";
  file.stream() << header_json(h).dump() << '\n';
  for (std::size_t n = 0; n < plans.size(); ++n) {
    const auto& p = plans[n];
    json j{{"type", "plan"},
           {"index", n},
           {"status", to_string(p.status)},
           {"objective", p.objective},
           {"rows", p.plan.rows()},
           {"cols", p.plan.cols()},
           {"plan", matrix_to_json(p.plan)}};
    file.stream() << j.dump() << '\n';
  }
  file.commit();
}

std::vector<PlanSolution> read_plans(const std::string& path, RecordHeader* header) {
  auto in = open_records(path, "plans", header);
  std::vector<PlanSolution> out;
  for_each_record(in, path, "plan", [&](const json& j) {
    PlanSolution p;
    const auto status = j.at("status").get<std::string>();
    bool known = false;
    for (const auto s : {LpStatus::Optimal, LpStatus::Infeasible, LpStatus::Unbounded,
                         LpStatus::NumericalFailure}) {
      if (status == to_string(s)) {
        p.status = s;
        known = true;
      }
    }
    if (!known) throw FormatError("unknown status '" + status + "'");
    p.objective = j.at("objective").get<double>();
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    p.plan = json_to_matrix<Matrix>(j.at("plan"), rows, cols, "plan");
    p.lp.status = p.status;
    p.lp.objective = p.objective;
    out.push_back(std::move(p));
  });
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& config_hash,
                     std::uint64_t seed, const std::vector<std::string>& columns)
    : file_(path), columns_(columns.size()) {
  auto& os = file_.stream();
  os << "# config_hash=" << config_hash << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("csv: wrong number of cells");
  auto& os = file_.stream();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            os << format_double(v);
          } else {
            os << v;
          }
        },
        cells[i]);
  }
  os << '\n';
}

}  // namespace permnet
