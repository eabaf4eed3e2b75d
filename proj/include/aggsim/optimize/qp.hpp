#pragma once

// Convex QP in the form
//   minimize   ½ zᵀ P z + qᵀ z + constant
//   subject to A z = b,  G z ≤ h

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aggsim/error.hpp"

namespace aggsim {

enum class VarKind { commitment, rt_bid, storage, abs_slack };

struct VariableLabel {
  VarKind kind = VarKind::commitment;
  int scenario = -1;  // -1 for variables shared by all scenarios
  int hour = 0;       // 1-based hour of day (storage: state at the start of that hour)

  std::string to_string() const {
    const char* name = "?";
    switch (kind) {
      case VarKind::commitment: name = "c"; break;
      case VarKind::rt_bid: name = "x"; break;
      case VarKind::storage: name = "s"; break;
      case VarKind::abs_slack: name = "u"; break;
    }
    std::string out = std::string(name) + "[" + std::to_string(hour);
    if (scenario >= 0) out += ",k=" + std::to_string(scenario);
    return out + "]";
  }

  auto operator<=>(const VariableLabel&) const = default;
};

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct QuadraticProgram {
  SparseMatrix P;  // symmetric, both triangles stored
  Eigen::VectorXd q;
  double constant = 0.0;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  std::vector<VariableLabel> labels;

  Eigen::Index variable_count() const { return q.size(); }

  double objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(P * z) + q.dot(z) + constant; }

  void validate() const {
    const auto n = q.size();
    detail::require(P.rows() == n && P.cols() == n, "QP: cost matrix dimension mismatch");
    detail::require(A.cols() == n && A.rows() == b.size(), "QP: equality constraint dimension mismatch");
    detail::require(G.cols() == n && G.rows() == h.size(), "QP: inequality constraint dimension mismatch");
    detail::require(labels.empty() || labels.size() == static_cast<std::size_t>(n), "QP: label map is not total");
    detail::require(q.allFinite() && b.allFinite() && h.allFinite(), "QP: non-finite data");
  }
};

/// Plain-text dump: one MatrixMarket coordinate block per matrix/vector,
/// preceded by a "% name" line, then the variable labels.
inline void write_matrix_market(const QuadraticProgram& qp, std::ostream& os) {
  os << std::setprecision(17);
  auto matrix = [&os](const char* name, const SparseMatrix& m) {
    os << "% " << name << "\n%%MatrixMarket matrix coordinate real general\n";
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
      }
    }
  };
  auto vector = [&os](const char* name, const Eigen::VectorXd& v) {
    os << "% " << name << "\n%%MatrixMarket matrix array real general\n" << v.size() << " 1\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
  };
  matrix("P", qp.P);
  vector("q", qp.q);
  matrix("A", qp.A);
  vector("b", qp.b);
  matrix("G", qp.G);
  vector("h", qp.h);
  os << "% constant " << qp.constant << '\n';
  os << "% labels\n";
  for (std::size_t i = 0; i < qp.labels.size(); ++i) os << i + 1 << ' ' << qp.labels[i].to_string() << '\n';
}

/// Reads back a dump written by write_matrix_market (labels are not restored).
inline QuadraticProgram read_matrix_market(std::istream& is) {
  QuadraticProgram qp;
  std::string line;
  auto next_data_line = [&]() {
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '%') return true;
    }
    return false;
  };
  auto read_matrix = [&](SparseMatrix& m) {
    if (!next_data_line()) throw InvalidArgument("matrix market: truncated header");
    std::istringstream head(line);
    Eigen::Index rows = 0, cols = 0, nnz = 0;
    head >> rows >> cols >> nnz;
    Triplets t;
    for (Eigen::Index k = 0; k < nnz; ++k) {
      if (!next_data_line()) throw InvalidArgument("matrix market: truncated entries");
      std::istringstream in(line);
      Eigen::Index r = 0, c = 0;
      double v = 0.0;
      in >> r >> c >> v;
      t.emplace_back(r - 1, c - 1, v);
    }
    m.resize(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
  };
  auto read_vector = [&](Eigen::VectorXd& v) {
    if (!next_data_line()) throw InvalidArgument("matrix market: truncated header");
    std::istringstream head(line);
    Eigen::Index rows = 0;
    head >> rows;
    v.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!next_data_line()) throw InvalidArgument("matrix market: truncated vector");
      v[i] = std::stod(line);
    }
  };
  read_matrix(qp.P);
  read_vector(qp.q);
  read_matrix(qp.A);
  read_vector(qp.b);
  read_matrix(qp.G);
  read_vector(qp.h);
  while (std::getline(is, line)) {
    if (line.rfind("% constant ", 0) == 0) qp.constant = std::stod(line.substr(11));
  }
  qp.validate();
  return qp;
}

inline std::string matrix_market_string(const QuadraticProgram& qp) {
  std::ostringstream os;
  write_matrix_market(qp, os);
  return os.str();
}

}  // namespace aggsim
