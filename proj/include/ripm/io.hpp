#ifndef RIPM_IO_HPP
#define RIPM_IO_HPP

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "ripm/problem.hpp"
#include "ripm/rcp.hpp"

namespace ripm::io {

using Json = nlohmann::json;

/// Parsed instance document: either a standard-form problem or an ERM.
struct Instance {
  std::variant<StandardProblem, ErmInstance> problem;
  /// Optional feasible point shipped with generated instances (standard form).
  std::optional<Vector> witness;

  bool is_erm() const { return std::holds_alternative<ErmInstance>(problem); }
  StandardProblem standard() const {
    return is_erm() ? erm_to_standard(std::get<ErmInstance>(problem))
                    : std::get<StandardProblem>(problem);
  }
  std::string name() const {
    return is_erm() ? std::get<ErmInstance>(problem).name : std::get<StandardProblem>(problem).name;
  }
};

namespace detail {

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const DenseMatrix& a) {
  Json out = Json::array();
  for (Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

[[noreturn]] inline void bad(const std::string& what) {
  throw Error(ErrorKind::InvalidArgument, "instance: " + what);
}

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) bad(what + " must be a number");
  return j.get<double>();
}

inline Vector vector_of(const Json& j, const std::string& what) {
  if (!j.is_array()) bad(what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(Index(i)) = number(j[i], what);
  return v;
}

/// Accepts a list of rows, or a flat row-major array with explicit "rows".
inline DenseMatrix matrix_of(const Json& doc, const char* key, std::optional<Index> rows_hint) {
  if (!doc.contains(key)) bad(std::string("missing '") + key + "'");
  const Json& j = doc.at(key);
  if (!j.is_array()) bad(std::string(key) + " must be an array");
  if (j.empty()) return DenseMatrix(rows_hint.value_or(0), 0);
  if (j[0].is_array()) {
    const Index rows = Index(j.size()), cols = Index(j[0].size());
    DenseMatrix a(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      if (!j[std::size_t(r)].is_array() || Index(j[std::size_t(r)].size()) != cols) {
        bad(std::string(key) + " rows have unequal lengths");
      }
      for (Index c = 0; c < cols; ++c) a(r, c) = number(j[std::size_t(r)][std::size_t(c)], key);
    }
    return a;
  }
  if (!rows_hint || *rows_hint <= 0 || Index(j.size()) % *rows_hint != 0) {
    bad(std::string("flat ") + key + " needs a matching 'rows' count");
  }
  const Index rows = *rows_hint, cols = Index(j.size()) / rows;
  DenseMatrix a(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) a(r, c) = number(j[std::size_t(r * cols + c)], key);
  }
  return a;
}

inline Json barrier_json(const Barrier& bar, Index size) {
  Json b;
  b["size"] = size;
  b["barrier"] = to_tag(bar.kind());
  switch (bar.kind()) {
    case BarrierKind::LogBox: b["lo"] = *bar.lo(); b["hi"] = *bar.hi(); break;
    case BarrierKind::Ball: b["radius"] = *bar.radius(); break;
    case BarrierKind::EpigraphAbs:
      if (bar.cap()) b["cap"] = *bar.cap();
      break;
    default: break;
  }
  return b;
}

inline Barrier barrier_of(const Json& b, Index size) {
  if (!b.contains("barrier") || !b["barrier"].is_string()) bad("block without barrier tag");
  const std::string tag = b["barrier"].get<std::string>();
  auto need = [&](Index want) {
    if (size != want) bad("barrier '" + tag + "' needs block size " + std::to_string(want));
  };
  if (tag == "log_positive") {
    need(1);
    return Barrier::log_positive();
  }
  if (tag == "log_box") {
    need(1);
    if (!b.contains("lo") || !b.contains("hi")) bad("log_box needs lo and hi");
    return Barrier::log_box(number(b["lo"], "lo"), number(b["hi"], "hi"));
  }
  if (tag == "ball") {
    if (!b.contains("radius")) bad("ball needs radius");
    return Barrier::ball(size, number(b["radius"], "radius"));
  }
  if (tag == "epigraph_abs") {
    need(2);
    std::optional<double> cap;
    if (b.contains("cap") && !b["cap"].is_null()) cap = number(b["cap"], "cap");
    return Barrier::epigraph_abs(cap);
  }
  bad("unknown barrier tag '" + tag + "'");
}

}  // namespace detail

inline Json to_json(const StandardProblem& p) {
  Json doc;
  doc["kind"] = "standard";
  doc["A"] = detail::to_json(p.a);
  doc["b"] = detail::to_json(p.b);
  doc["c"] = detail::to_json(p.c);
  Json blocks = Json::array();
  for (Index i = 0; i < p.structure.num_blocks(); ++i) {
    blocks.push_back(detail::barrier_json(p.barriers[std::size_t(i)], p.structure.size(i)));
  }
  doc["blocks"] = blocks;
  Json meta = Json::object();
  if (p.radius) meta["R"] = *p.radius;
  if (p.lipschitz) meta["L"] = *p.lipschitz;
  meta["name"] = p.name;
  doc["metadata"] = meta;
  return doc;
}

inline Json to_json(const ErmInstance& e) {
  Json doc;
  doc["kind"] = "erm";
  doc["data"] = detail::to_json(e.data);
  doc["offsets"] = detail::to_json(e.offsets);
  Json losses = Json::array();
  for (LossKind k : e.losses) losses.push_back(to_tag(k));
  doc["losses"] = losses;
  if (!e.theta.empty()) doc["theta"] = e.theta;
  doc["R"] = e.radius;
  doc["metadata"] = Json{{"name", e.name}};
  return doc;
}

inline Json to_json(const Instance& inst) {
  Json doc = std::visit([](const auto& p) { return to_json(p); }, inst.problem);
  if (inst.witness) doc["witness"] = detail::to_json(*inst.witness);
  return doc;
}

inline StandardProblem standard_from_json(const Json& doc) {
  StandardProblem p;
  std::optional<Index> rows;
  if (doc.contains("b")) rows = Index(doc["b"].size());
  p.a = detail::matrix_of(doc, "A", rows);
  if (!doc.contains("b") || !doc.contains("c")) detail::bad("missing b or c");
  p.b = detail::vector_of(doc["b"], "b");
  p.c = detail::vector_of(doc["c"], "c");
  if (!doc.contains("blocks") || !doc["blocks"].is_array()) detail::bad("missing blocks");
  std::vector<Index> sizes;
  for (const Json& b : doc["blocks"]) {
    if (!b.contains("size") || !b["size"].is_number_integer()) detail::bad("block without size");
    const Index size = b["size"].get<Index>();
    if (size < 1) detail::bad("block size must be positive");
    sizes.push_back(size);
    p.barriers.push_back(detail::barrier_of(b, size));
  }
  p.structure = BlockStructure(sizes);
  if (doc.contains("metadata")) {
    const Json& meta = doc["metadata"];
    if (meta.contains("R") && !meta["R"].is_null()) p.radius = detail::number(meta["R"], "R");
    if (meta.contains("L") && !meta["L"].is_null()) p.lipschitz = detail::number(meta["L"], "L");
    if (meta.contains("name") && meta["name"].is_string()) p.name = meta["name"].get<std::string>();
  }
  return p;
}

inline ErmInstance erm_from_json(const Json& doc) {
  ErmInstance e;
  if (!doc.contains("offsets")) detail::bad("erm instance needs offsets");
  e.offsets = detail::vector_of(doc["offsets"], "offsets");
  e.data = detail::matrix_of(doc, "data", e.offsets.size());
  if (!doc.contains("losses")) detail::bad("erm instance needs losses");
  const Json& losses = doc["losses"];
  if (losses.is_string()) {
    e.losses.assign(std::size_t(e.data.rows()), parse_loss(losses.get<std::string>()));
  } else if (losses.is_array()) {
    for (const Json& l : losses) {
      if (!l.is_string()) detail::bad("loss tags must be strings");
      e.losses.push_back(parse_loss(l.get<std::string>()));
    }
  } else {
    detail::bad("losses must be a tag or a list of tags");
  }
  if (doc.contains("theta")) {
    const Json& th = doc["theta"];
    if (th.is_number()) {
      e.theta.assign(std::size_t(e.data.rows()), th.get<double>());
    } else {
      const Vector v = detail::vector_of(th, "theta");
      e.theta.assign(v.data(), v.data() + v.size());
    }
  }
  if (!doc.contains("R")) detail::bad("erm instance needs R");
  e.radius = detail::number(doc["R"], "R");
  if (doc.contains("metadata") && doc["metadata"].contains("name")) {
    e.name = doc["metadata"]["name"].get<std::string>();
  }
  return e;
}

inline Instance instance_from_json(const Json& doc) {
  if (!doc.is_object()) detail::bad("top level must be an object");
  const std::string kind = doc.value("kind", std::string("standard"));
  Instance inst;
  if (kind == "standard") {
    inst.problem = standard_from_json(doc);
  } else if (kind == "erm") {
    inst.problem = erm_from_json(doc);
  } else {
    detail::bad("unknown kind '" + kind + "'");
  }
  if (doc.contains("witness")) inst.witness = detail::vector_of(doc["witness"], "witness");
  return inst;
}

inline std::string dump(const Json& doc) { return doc.dump(1) + "\n"; }

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open instance file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "instance '" + path + "': " + e.what());
  }
  return instance_from_json(doc);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  out << text;
}

inline void write_instance(const std::string& path, const Instance& inst) {
  write_text(path, dump(to_json(inst)));
}

/// Field-by-field equality; doubles compared exactly.
inline bool same_problem(const StandardProblem& x, const StandardProblem& y) {
  auto same_mat = [](const DenseMatrix& p, const DenseMatrix& q) {
    return p.rows() == q.rows() && p.cols() == q.cols() && p == q;
  };
  auto same_vec = [](const Vector& p, const Vector& q) { return p.size() == q.size() && p == q; };
  return same_mat(x.a, y.a) && same_vec(x.b, y.b) && same_vec(x.c, y.c) &&
         x.structure == y.structure && x.barriers == y.barriers && x.radius == y.radius &&
         x.lipschitz == y.lipschitz && x.name == y.name;
}

inline bool same_problem(const ErmInstance& x, const ErmInstance& y) {
  return x.data.rows() == y.data.rows() && x.data.cols() == y.data.cols() && x.data == y.data &&
         x.offsets.size() == y.offsets.size() && x.offsets == y.offsets &&
         x.losses == y.losses && x.theta == y.theta && x.radius == y.radius && x.name == y.name;
}

inline Json solution_json(const Solution& sol, const PathResult* path = nullptr) {
  Json doc;
  doc["status"] = to_string(sol.status);
  doc["x"] = detail::to_json(sol.x);
  doc["objective"] = sol.objective;
  doc["gap_bound"] = sol.gap_bound;
  doc["primal_infeas"] = sol.primal_infeas;
  doc["tau"] = sol.tau;
  doc["objective_bound"] = sol.objective_bound;
  doc["infeas_bound"] = sol.infeas_bound;
  doc["interior"] = sol.interior;
  if (path) {
    doc["iterations"] = path->iterations;
    doc["rebuilds"] = path->rebuilds;
    doc["full_updates"] = path->full_updates;
  }
  return doc;
}

/// Iteration log; one row per iteration, flushed as written.
class CsvLog {
 public:
  static constexpr const char* header =
      "iter,t,log_phi,max_gamma,h_norm,update_branch,r,rebuilds,wall_ms";

  explicit CsvLog(const std::string& path) : file_(std::fopen(path.c_str(), "w")) {
    if (!file_) throw Error(ErrorKind::InvalidArgument, "cannot open log '" + path + "'");
    std::fputs(header, file_);
    std::fputc('\n', file_);
    std::fflush(file_);
  }
  CsvLog(const CsvLog&) = delete;
  CsvLog& operator=(const CsvLog&) = delete;
  ~CsvLog() {
    if (file_) std::fclose(file_);
  }

  static std::string format(const IterationRecord& r) {
    return fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{:.3f}", r.iter, r.t,
                       r.log_phi, r.max_gamma, r.h_norm, to_string(r.branch), r.r, r.rebuilds, r.wall_ms);
  }

  void write(const IterationRecord& r) {
    const std::string line = format(r);
    std::fputs(line.c_str(), file_);
    std::fputc('\n', file_);
    std::fflush(file_);
  }

 private:
  std::FILE* file_ = nullptr;
};

/// Drops the trailing wall_ms column from every line of a log.
inline std::string strip_wall_clock(const std::string& log) {
  std::istringstream in(log);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut) + "\n";
  }
  return out;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ripm::io

#endif  // RIPM_IO_HPP
