#include "cbfshield/qp.hpp"

#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace cbfshield::qp {

namespace {

void write_row(std::ostream& os, const Eigen::Ref<const Eigen::VectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      if (line.starts_with('#')) continue;
      if (line == "solution") break;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back(tok);
    }
  }

  void expect(const std::string& word) {
    if (next() != word) throw Error(ErrorCode::Parse, "qp dump: expected '" + word + "'");
  }
  std::string next() {
    if (pos_ >= tokens_.size()) throw Error(ErrorCode::Parse, "qp dump: unexpected end of input");
    return tokens_[pos_++];
  }
  double number() {
    const std::string tok = next();
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw Error(ErrorCode::Parse, "qp dump: bad number '" + tok + "'");
    return v;
  }
  int integer() {
    const double v = number();
    if (v < 0 || v != static_cast<int>(v)) throw Error(ErrorCode::Parse, "qp dump: bad count");
    return static_cast<int>(v);
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_dump(std::ostream& os, const QpProblem& problem, const QpSolution* solution, const std::string& note) {
  const auto old_precision = os.precision(17);
  const int n = problem.num_vars();
  os << "# cbfshield qp dump v1\n";
  if (!note.empty()) os << "# " << note << '\n';
  os << "n " << n << "\nH\n";
  for (int i = 0; i < n; ++i) write_row(os, problem.H.row(i).transpose());
  os << "f\n";
  write_row(os, problem.f);
  os << "ineq " << problem.ineq.size() << '\n';
  for (const auto& c : problem.ineq) {
    for (Eigen::Index i = 0; i < c.a.size(); ++i) os << c.a[i] << ' ';
    os << c.b << '\n';
  }
  os << "lo\n";
  write_row(os, problem.lo);
  os << "hi\n";
  write_row(os, problem.hi);
  if (solution) {
    os << "solution\nx ";
    write_row(os, solution->x);
    os << "active";
    for (std::size_t k = 0; k < solution->active_set.size(); ++k) {
      os << " [" << solution->active_set[k].to_string() << " mu=" << solution->multipliers[k] << "]";
    }
    os << "\niterations " << solution->iterations << "\nobjective " << solution->objective << "\nkkt_residual "
       << solution->kkt_residual << '\n';
  }
  os.precision(old_precision);
}

QpProblem read_dump(std::istream& is) {
  TokenReader in(is);
  in.expect("n");
  const int n = in.integer();
  QpProblem p;
  p.H.resize(n, n);
  p.f.resize(n);
  p.lo.resize(n);
  p.hi.resize(n);
  in.expect("H");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.H(i, j) = in.number();
  in.expect("f");
  for (int i = 0; i < n; ++i) p.f[i] = in.number();
  in.expect("ineq");
  const int m = in.integer();
  for (int k = 0; k < m; ++k) {
    LinearInequality c;
    c.a.resize(n);
    for (int i = 0; i < n; ++i) c.a[i] = in.number();
    c.b = in.number();
    p.ineq.push_back(std::move(c));
  }
  in.expect("lo");
  for (int i = 0; i < n; ++i) p.lo[i] = in.number();
  in.expect("hi");
  for (int i = 0; i < n; ++i) p.hi[i] = in.number();
  return p;
}

}  // namespace cbfshield::qp
