#include "repgame/game.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "repgame/errors.hpp"

namespace repgame {

namespace {

using nlohmann::json;

std::string describe(const char* what, int index) {
  std::ostringstream os;
  os << what << " " << index;
  return os.str();
}

void check_matrix_shape(std::vector<Violation>& out, const Matrix& m, int rows, int cols,
                        const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    out.push_back({"PayoffShapeMismatch", os.str()});
  }
}

void check_finite(std::vector<Violation>& out, const Matrix& m, const char* name) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      out.push_back({"NonFiniteEntry", std::string(name) + " has a non-finite entry"});
      return;
    }
  }
}

void check_row_stochastic(std::vector<Violation>& out, const Matrix& m, const char* name) {
  for (int r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    bool in_range = true;
    for (int c = 0; c < m.cols(); ++c) {
      double v = m.at(r, c);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) in_range = false;
      sum += v;
    }
    if (!in_range) {
      out.push_back({"KernelEntryOutOfRange", std::string(name) + " row " + std::to_string(r)});
    }
    if (!(std::abs(sum - 1.0) <= kProbTol)) {
      out.push_back({"KernelRowNotStochastic",
                     std::string(name) + " row " + std::to_string(r) + " sums to " +
                         std::to_string(sum)});
    }
  }
}

Matrix identity_matrix(int n) {
  Matrix m(n, n, 0.0);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

}  // namespace

int TypeSpace::index_of(const std::string& name) const {
  for (int i = 0; i < num_commitment(); ++i) {
    if (commitment_types[static_cast<std::size_t>(i)].name == name) return i;
  }
  raise(Errc::UnknownType, "no commitment type named '" + name + "'");
}

std::vector<Violation> validate(const GameSpec& spec) {
  std::vector<Violation> out;
  const auto& st = spec.stage;

  if (st.a1_labels.empty() || st.a2_labels.empty()) {
    out.push_back({"LabelCountMismatch", "action label lists must be nonempty"});
    return out;  // shapes below would be meaningless
  }
  check_matrix_shape(out, st.u1, st.num_a1(), st.num_a2(), "u1");
  check_matrix_shape(out, st.u2, st.num_a1(), st.num_a2(), "u2");
  check_finite(out, st.u1, "u1");
  check_finite(out, st.u2, "u2");

  std::set<std::string> names;
  for (int i = 0; i < spec.types.num_commitment(); ++i) {
    const auto& ct = spec.types.commitment_types[static_cast<std::size_t>(i)];
    if (!names.insert(ct.name).second) {
      out.push_back({"DuplicateTypeName", ct.name});
    }
    if (static_cast<int>(ct.mixed.size()) != st.num_a1() ||
        !is_probability_vector(ct.mixed)) {
      out.push_back({"MixedActionInvalid", describe("commitment type", i)});
    }
  }

  const auto& mon = spec.monitoring;
  if (mon.rho2.rows() != st.num_a1() || mon.rho2.cols() != mon.num_z2()) {
    out.push_back({"KernelShapeMismatch", "rho2 must be |A1| x |Z2|"});
  } else {
    check_row_stochastic(out, mon.rho2, "rho2");
  }
  if (mon.rho1.rows() != st.num_a1() * st.num_a2() || mon.rho1.cols() != mon.num_z1()) {
    out.push_back({"KernelShapeMismatch", "rho1 must be (|A1|*|A2|) x |Z1|"});
  } else {
    check_row_stochastic(out, mon.rho1, "rho1");
  }

  if (static_cast<int>(spec.mu0.size()) != spec.types.total_types()) {
    out.push_back({"PriorLengthMismatch",
                   "mu0 has " + std::to_string(spec.mu0.size()) + " entries, expected " +
                       std::to_string(spec.types.total_types())});
  } else {
    double sum = 0.0;
    bool full_support = true;
    bool finite = true;
    for (double v : spec.mu0) {
      if (!std::isfinite(v)) finite = false;
      if (!(v > 0.0)) full_support = false;
      sum += v;
    }
    if (!finite) {
      out.push_back({"NonFiniteEntry", "mu0"});
    } else {
      if (!full_support) out.push_back({"PriorNotFullSupport", "mu0 has a zero entry"});
      if (!(std::abs(sum - 1.0) <= kProbTol)) {
        out.push_back({"PriorNotNormalized", "mu0 sums to " + std::to_string(sum)});
      }
    }
  }

  if (!(spec.delta > 0.0) || !(spec.delta < 1.0) || !std::isfinite(spec.delta)) {
    out.push_back({"DeltaOutOfRange", "delta = " + std::to_string(spec.delta)});
  }
  return out;
}

GameSpec builtin_product_choice(double mu_commit, double delta) {
  if (!(mu_commit > 0.0) || !(mu_commit < 1.0)) {
    raise(Errc::ParameterOutOfRange, "mu_commit must lie in (0,1)");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    raise(Errc::ParameterOutOfRange, "delta must lie in (0,1)");
  }
  GameSpec spec;
  spec.stage.a1_labels = {"H", "L"};
  spec.stage.a2_labels = {"h", "l"};
  spec.stage.u1 = Matrix(2, 2, {2, 0, 3, 1});
  spec.stage.u2 = Matrix(2, 2, {3, 2, 0, 1});
  spec.types.commitment_types = {{"always-H", {1.0, 0.0}}};
  spec.monitoring.z2_labels = {"H", "L"};
  spec.monitoring.rho2 = identity_matrix(2);
  spec.monitoring.z1_labels = {"Hh", "Hl", "Lh", "Ll"};
  spec.monitoring.rho1 = identity_matrix(4);
  spec.mu0 = {mu_commit, 1.0 - mu_commit};
  spec.delta = delta;
  return spec;
}

GameSpec builtin_consultant(double p, double q, double r, double mu_commit, double delta) {
  if (!(p > 0.5) || !(p < 1.0)) {
    raise(Errc::ParameterOutOfRange, "accuracy p must lie in (1/2,1)");
  }
  if (!(r > 0.5) || !(q < 1.0) || !(q > r)) {
    raise(Errc::QROrderViolated, "private-signal probabilities must satisfy 1/2 < r < q < 1");
  }
  if (!(mu_commit > 0.0) || !(mu_commit < 1.0)) {
    raise(Errc::ParameterOutOfRange, "mu_commit must lie in (0,1)");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    raise(Errc::ParameterOutOfRange, "delta must lie in (0,1)");
  }
  GameSpec spec;
  spec.stage.a1_labels = {"H", "L"};
  spec.stage.a2_labels = {"B", "N"};
  spec.stage.u1 = Matrix(2, 2, {1, -1, 2, 0});
  spec.stage.u2 = Matrix(2, 2, {1, -1, -2, 0});
  spec.types.commitment_types = {{"always-H", {1.0, 0.0}}};
  spec.monitoring.z2_labels = {"h", "l"};
  spec.monitoring.rho2 = Matrix(2, 2, {p, 1 - p, 1 - p, p});
  spec.monitoring.z1_labels = {"b", "n"};
  // Rows (H,B), (H,N), (L,B), (L,N): bonus odds rise with effort and with a
  // bonus recommendation, q > r > 1/2.
  spec.monitoring.rho1 = Matrix(4, 2, {q, 1 - q, r, 1 - r, 1 - r, r, 1 - q, q});
  spec.mu0 = {mu_commit, 1.0 - mu_commit};
  spec.delta = delta;
  return spec;
}

RankReport rank_monitoring(const GameSpec& spec) {
  const Matrix& rho2 = spec.monitoring.rho2;
  int num_a1 = rho2.rows();
  int num_z2 = rho2.cols();
  Eigen::MatrixXd a(num_z2, num_a1);
  for (int z = 0; z < num_z2; ++z) {
    for (int i = 0; i < num_a1; ++i) a(z, i) = rho2.at(i, z);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  double tol = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return {rank, rank == num_a1};
}

namespace {

Matrix matrix_from_json(const json& rows, const char* name) {
  if (!rows.is_array() || rows.empty()) {
    raise(Errc::BadArgument, std::string(name) + " must be a nonempty array of rows");
  }
  int num_rows = static_cast<int>(rows.size());
  int num_cols = static_cast<int>(rows[0].size());
  Matrix m(num_rows, num_cols);
  for (int r = 0; r < num_rows; ++r) {
    if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != num_cols) {
      raise(Errc::BadArgument, std::string(name) + " rows have uneven lengths");
    }
    for (int c = 0; c < num_cols; ++c) {
      m.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

GameSpec spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(Errc::BadArgument, std::string("JSON parse error: ") + e.what());
  }
  try {
    GameSpec spec;
    spec.stage.a1_labels = j.at("a1").get<std::vector<std::string>>();
    spec.stage.a2_labels = j.at("a2").get<std::vector<std::string>>();
    spec.monitoring.z1_labels = j.at("z1").get<std::vector<std::string>>();
    spec.monitoring.z2_labels = j.at("z2").get<std::vector<std::string>>();
    spec.stage.u1 = matrix_from_json(j.at("u1"), "u1");
    spec.stage.u2 = matrix_from_json(j.at("u2"), "u2");
    spec.monitoring.rho1 = matrix_from_json(j.at("rho1"), "rho1");
    spec.monitoring.rho2 = matrix_from_json(j.at("rho2"), "rho2");
    for (const auto& ct : j.at("commitment_types")) {
      spec.types.commitment_types.push_back(
          {ct.at("name").get<std::string>(), ct.at("mixed").get<std::vector<double>>()});
    }
    spec.mu0 = j.at("mu0").get<std::vector<double>>();
    spec.delta = j.at("delta").get<double>();
    return spec;
  } catch (const json::exception& e) {
    raise(Errc::BadArgument, std::string("spec schema error: ") + e.what());
  }
}

std::string spec_to_json_text(const GameSpec& spec, int indent) {
  json j;
  j["a1"] = spec.stage.a1_labels;
  j["a2"] = spec.stage.a2_labels;
  j["z1"] = spec.monitoring.z1_labels;
  j["z2"] = spec.monitoring.z2_labels;
  j["u1"] = matrix_to_json(spec.stage.u1);
  j["u2"] = matrix_to_json(spec.stage.u2);
  j["commitment_types"] = json::array();
  for (const auto& ct : spec.types.commitment_types) {
    j["commitment_types"].push_back({{"name", ct.name}, {"mixed", ct.mixed}});
  }
  j["rho1"] = matrix_to_json(spec.monitoring.rho1);
  j["rho2"] = matrix_to_json(spec.monitoring.rho2);
  j["mu0"] = spec.mu0;
  j["delta"] = spec.delta;
  return j.dump(indent);
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::ParameterOutOfRange: return "ParameterOutOfRange";
    case Errc::QROrderViolated: return "QROrderViolated";
    case Errc::ZeroProbabilitySignal: return "ZeroProbabilitySignal";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::UnknownType: return "UnknownType";
    case Errc::IterationLimitExceeded: return "IterationLimitExceeded";
    case Errc::NoPositiveEpsilon: return "NoPositiveEpsilon";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::NonDecayingTail: return "NonDecayingTail";
    case Errc::HorizonTooShort: return "HorizonTooShort";
    case Errc::FullRankRequired: return "FullRankRequired";
    case Errc::NoCommitmentTypes: return "NoCommitmentTypes";
    case Errc::BadArgument: return "BadArgument";
  }
  return "UnknownError";
}

}  // namespace repgame
