#include "hsg/lie.hpp"
#include "hsg/hodge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hsg {

std::string embedded_catalogue(const std::string& name);  // generated
std::vector<std::string> embedded_catalogue_names();      // generated

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error("ParseError", "line " + std::to_string(line) + ": " + msg);
}

double parse_real(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (...) {
    parse_fail(line, "bad number '" + s + "'");
  }
  if (used != s.size()) parse_fail(line, "bad number '" + s + "'");
  return v;
}

// Accepts 2, -0.5, i, -i, 3i, (1-2i), (0.5+i).
cplx parse_complex(std::string s, int line) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  if (s.empty()) parse_fail(line, "empty coefficient");
  if (s.front() == '(') {
    if (s.back() != ')') parse_fail(line, "unbalanced parenthesis");
    s = s.substr(1, s.size() - 2);
  }
  if (s.back() != 'i') return {parse_real(s, line), 0.0};
  std::string body = s.substr(0, s.size() - 1);
  // split real and imaginary parts at the last sign not following an exponent
  std::size_t cut = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      cut = k;
      break;
    }
  auto imag_of = [&](const std::string& t) -> double {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_real(t, line);
  };
  if (cut == std::string::npos) return {0.0, imag_of(body)};
  return {parse_real(body.substr(0, cut), line), imag_of(body.substr(cut))};
}

int parse_generator(const std::string& tok, int n, int line) {
  std::string t = trim(tok);
  bool anti = false;
  std::string digits;
  if (t.rfind("phibar", 0) == 0) {
    anti = true;
    digits = t.substr(6);
  } else if (t.rfind("phi", 0) == 0) {
    digits = t.substr(3);
  } else {
    parse_fail(line, "unknown generator '" + t + "'");
  }
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
    parse_fail(line, "unknown generator '" + t + "'");
  int k = std::stoi(digits);
  if (k < 1 || k > n) parse_fail(line, "unknown generator '" + t + "'");
  return (k - 1) + (anti ? n : 0);
}

std::vector<std::string> split_terms(const std::string& rhs) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    char ch = rhs[k];
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    bool sign = (ch == '+' || ch == '-') && depth == 0;
    bool exponent = k > 0 && (rhs[k - 1] == 'e' || rhs[k - 1] == 'E') && k > 1 &&
                    std::isdigit(static_cast<unsigned char>(rhs[k - 2]));
    if (sign && !exponent && !trim(cur).empty()) {
      out.push_back(trim(cur));
      cur.clear();
    }
    cur += ch;
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

LieTerm parse_term(const std::string& term, int n, int line) {
  LieTerm t;
  std::string word = term;
  auto star = term.find('*');
  if (star != std::string::npos) {
    t.coeff = parse_complex(term.substr(0, star), line);
    word = term.substr(star + 1);
  } else {
    std::string w = trim(term);
    double s = 1.0;
    while (!w.empty() && (w[0] == '+' || w[0] == '-')) {
      if (w[0] == '-') s = -s;
      w = trim(w.substr(1));
    }
    t.coeff = s;
    word = w;
  }
  auto caret = word.find('^');
  if (caret == std::string::npos) parse_fail(line, "term '" + term + "' is not a wedge of two generators");
  t.a = parse_generator(word.substr(0, caret), n, line);
  t.b = parse_generator(word.substr(caret + 1), n, line);
  if (word.find('^', caret + 1) != std::string::npos)
    parse_fail(line, "term '" + term + "' has more than two generators");
  return t;
}

using Poly = std::map<Mono, cplx>;

int conj_gen(int g, int n) { return g < n ? g + n : g - n; }

void add_term(Poly& poly, Mono m, cplx c) {
  if (c == cplx(0.0, 0.0)) return;
  poly[m] += c;
}

}  // namespace

LieModelSpec parse_model_text(const std::string& text) {
  LieModelSpec spec;
  spec.name.clear();
  bool have_dim = false;
  std::set<int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) parse_fail(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key == "name") {
      spec.name = val;
    } else if (key == "dim") {
      spec.n = int(parse_real(val, line));
      if (spec.n < 1 || spec.n > 5) parse_fail(line, "dim must be between 1 and 5");
      have_dim = true;
    } else if (key.rfind("d ", 0) == 0) {
      if (!have_dim) parse_fail(line, "'dim' must precede differential rules");
      std::string gen = trim(key.substr(2));
      int g = parse_generator(gen, spec.n, line);
      if (g >= spec.n) parse_fail(line, "rules are given for phi<k> only; d phibar is the conjugate");
      if (!seen.insert(g).second) parse_fail(line, "duplicate rule for " + gen);
      LieRule rule;
      rule.target = g;
      if (val.empty()) parse_fail(line, "empty right-hand side");
      if (val != "0")
        for (const auto& t : split_terms(val)) rule.terms.push_back(parse_term(t, spec.n, line));
      spec.dphi.push_back(rule);
    } else {
      parse_fail(line, "unknown key '" + key + "'");
    }
  }
  if (!have_dim) throw Error("ParseError", "missing 'dim'");
  if (spec.name.empty()) throw Error("ParseError", "missing 'name'");
  return spec;
}

LieModelSpec read_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("InvalidInput", "cannot read model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_model_text(ss.str());
}

ModelPtr load_model(const LieModelSpec& spec) {
  const int n = spec.n;
  const Basis& B = Basis::get(n);

  std::vector<Poly> dgen(2 * n);
  for (const auto& rule : spec.dphi)
    for (const auto& t : rule.terms) {
      if (t.a >= n && t.b >= n)
        throw Error("IntegrabilityError", "d phi" + std::to_string(rule.target + 1) +
                                              " has a (0,2) component");
      Mono ma = Mono(1) << t.a, mb = Mono(1) << t.b;
      int s = mono_wedge_sign(ma, mb);
      add_term(dgen[rule.target], ma | mb, double(s) * t.coeff);
      Mono ca = Mono(1) << conj_gen(t.a, n), cb = Mono(1) << conj_gen(t.b, n);
      int cs = mono_wedge_sign(ca, cb);
      add_term(dgen[rule.target + n], ca | cb, double(cs) * std::conj(t.coeff));
    }

  auto m = std::make_shared<Model>();
  m->backend = Backend::lie;
  m->n = n;
  m->name = spec.name;
  const int S = (n + 1) * (n + 1);
  m->dmat_del.resize(S);
  m->dmat_dbar.resize(S);

  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      Mat Dd = Mat::Zero(B.dim(p + 1, q), B.dim(p, q));
      Mat Db = Mat::Zero(B.dim(p, q + 1), B.dim(p, q));
      for (int col = 0; col < B.dim(p, q); ++col) {
        Mono mono = B.mono(p, q, col);
        Poly out;
        int t = 0;
        for (Mono rest = mono; rest; rest &= rest - 1, ++t) {
          int g = std::countr_zero(rest);
          Mono below = mono & ((Mono(1) << g) - 1);
          Mono above = mono & ~((Mono(2) << g) - 1);
          for (const auto& [m2, c] : dgen[g]) {
            int s1 = mono_wedge_sign(below, m2);
            if (!s1) continue;
            int s2 = mono_wedge_sign(below | m2, above);
            if (!s2) continue;
            add_term(out, below | m2 | above, c * double(s1 * s2 * ((t & 1) ? -1 : 1)));
          }
        }
        for (const auto& [mo, c] : out) {
          int hp = Basis::hol_degree(mo, n), aq = Basis::anti_degree(mo, n);
          if (hp == p + 1 && aq == q)
            Dd(B.index(mo), col) += c;
          else if (hp == p && aq == q + 1)
            Db(B.index(mo), col) += c;
          else if (std::abs(c) > 0.0)
            throw Error("IntegrabilityError", "differential leaves bidegrees (p+1,q),(p,q+1)");
        }
      }
      m->dmat_del[m->slot(p, q)] = Dd;
      m->dmat_dbar[m->slot(p, q)] = Db;
    }

  // d^2 = 0 on every bidegree
  double worst = 0.0;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= n; ++q) {
      const Mat& Dd = m->dmat_del[m->slot(p, q)];
      const Mat& Db = m->dmat_dbar[m->slot(p, q)];
      if (p + 2 <= n) worst = std::max(worst, (m->dmat_del[m->slot(p + 1, q)] * Dd).norm());
      if (q + 2 <= n) worst = std::max(worst, (m->dmat_dbar[m->slot(p, q + 1)] * Db).norm());
      if (p + 1 <= n && q + 1 <= n)
        worst = std::max(worst, (m->dmat_del[m->slot(p, q + 1)] * Db +
                                 m->dmat_dbar[m->slot(p + 1, q)] * Dd)
                                    .norm());
    }
  if (worst > 1e-13) throw Error("JacobiError", "d^2 != 0, residual " + std::to_string(worst));

  // Invariant top-degree forms must integrate exact forms to zero.
  double top = 0.0;
  if (n >= 1) {
    top = std::max(top, m->dmat_del[m->slot(n - 1, n)].norm());
    top = std::max(top, m->dmat_dbar[m->slot(n, n - 1)].norm());
  }
  if (top > 1e-13)
    throw Error("UnimodularityError", "d of invariant (2n-1)-forms is nonzero; Stokes fails");
  return m;
}

std::vector<std::string> catalogue_names() { return embedded_catalogue_names(); }

std::string catalogue_text(const std::string& name) {
  std::string t = embedded_catalogue(name);
  if (t.empty()) throw Error("InvalidInput", "unknown catalogue model '" + name + "'");
  return t;
}

ModelPtr load_catalogue(const std::string& name) { return load_model(parse_model_text(catalogue_text(name))); }

OperatorMatrix operator_matrix(const Model& model, Part part, int p, int q) {
  degree_dims(model, p, q);
  if (!model.algebraic()) throw Error("InvalidInput", "operator matrices are available on the lie backend only");
  OperatorMatrix om;
  om.src_p = p;
  om.src_q = q;
  om.dst_p = part == Part::del ? p + 1 : p;
  om.dst_q = part == Part::del ? q : q + 1;
  om.matrix = (part == Part::del ? model.dmat_del : model.dmat_dbar)[model.slot(p, q)];
  return om;
}

Feasibility hs_feasibility(const Form& omega, double tol) {
  auto g = metric_from_form(omega);
  const ModelPtr& m = omega.model;
  if (!m->algebraic()) throw Error("InvalidInput", "hs_feasibility is a lie-backend certificate");

  // unknown rho in (2,0); constraints land in (3,0) and (2,1)
  Mat Rs = orthonormalizer(*g, 2, 0);
  Mat Rt1 = orthonormalizer(*g, 3, 0);
  Mat Rt2 = orthonormalizer(*g, 2, 1);
  Mat Dd = dense_operator(m, 2, 0, [](const Form& f) { return differential(Part::del, f); });
  Mat Db = dense_operator(m, 2, 0, [](const Form& f) { return differential(Part::dbar, f); });
  const Eigen::Index r1 = Rt1.rows(), r2 = Rt2.rows();
  Mat A(r1 + r2, Rs.rows());
  Mat Rs_inv = Rs.inverse();
  if (r1) A.topRows(r1) = Rt1 * Dd * Rs_inv;
  A.bottomRows(r2) = Rt2 * Db * Rs_inv;
  Vec rhs = Vec::Zero(r1 + r2);
  Form dw = differential(Part::del, omega);
  rhs.tail(r2) = -(Rt2 * dw.flat());

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  cod.setThreshold(1e-12);
  Vec y = cod.solve(rhs);
  Feasibility out;
  out.rho = Form::from_flat(m, 2, 0, Rs_inv * y);
  out.residual = (A * y - rhs).norm();
  out.feasible = out.residual < tol * std::max(1.0, rhs.norm());
  out.solution_space_dim = int(A.cols() - cod.rank());
  return out;
}

}  // namespace hsg
