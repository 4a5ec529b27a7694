#include "magwell/jet.hpp"

#include <cstdio>
#include <map>
#include <mutex>

namespace magwell {

namespace {
std::mutex g_tables_mutex;
std::map<std::pair<int, int>, JetTables*> g_tables;  // leaked on purpose, process-lifetime
}  // namespace

const JetTables& JetTables::get(int nvars, int degree) {
  if (nvars < 1 || nvars > 3) throw NumericalError("jet: nvars must be 1..3");
  if (degree < 0 || degree > 16) throw NumericalError("jet: degree cap out of range");
  std::lock_guard<std::mutex> lock(g_tables_mutex);
  auto key = std::make_pair(nvars, degree);
  auto it = g_tables.find(key);
  if (it != g_tables.end()) return *it->second;

  auto* t = new JetTables;
  t->nvars = nvars;
  t->degree = degree;
  int d1 = degree + 1;
  t->rank_lut.assign(static_cast<std::size_t>(d1) * d1 * d1, -1);
  // Graded order; within a grade, descending lexicographic in (e0, e1).
  auto add_index = [&](int e0, int e1, int e2) {
    t->rank_lut[(e0 * d1 + e1) * d1 + e2] = static_cast<int>(t->exps.size());
    t->exps.push_back({e0, e1, e2});
  };
  for (int total = 0; total <= degree; ++total) {
    for (int e0 = total; e0 >= 0; --e0) {
      if (nvars == 1) {
        if (e0 == total) add_index(e0, 0, 0);
      } else if (nvars == 2) {
        add_index(e0, total - e0, 0);
      } else {
        for (int e1 = total - e0; e1 >= 0; --e1) add_index(e0, e1, total - e0 - e1);
      }
    }
  }
  for (std::size_t ia = 0; ia < t->exps.size(); ++ia) {
    for (std::size_t ib = 0; ib < t->exps.size(); ++ib) {
      const auto& a = t->exps[ia];
      const auto& b = t->exps[ib];
      int e0 = a[0] + b[0], e1 = a[1] + b[1], e2 = a[2] + b[2];
      if (e0 + e1 + e2 > degree) continue;
      t->prod.push_back({static_cast<int>(ia), static_cast<int>(ib),
                         t->rank_lut[(e0 * d1 + e1) * d1 + e2]});
    }
  }
  g_tables[key] = t;
  return *t;
}

JetC to_complex(const JetD& j) {
  JetC r(j.nvars(), j.degree());
  for (std::size_t i = 0; i < j.size(); ++i) r.raw(static_cast<int>(i)) = j.raw(static_cast<int>(i));
  return r;
}

JetD real_part(const JetC& j) {
  JetD r(j.nvars(), j.degree());
  for (std::size_t i = 0; i < j.size(); ++i)
    r.raw(static_cast<int>(i)) = j.raw(static_cast<int>(i)).real();
  return r;
}

double max_imag(const JetC& j) {
  double m = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i)
    m = std::max(m, std::abs(j.raw(static_cast<int>(i)).imag()));
  return m;
}

JetD jet_from_expr(const Expr& e, const Vec3& center, int degree) {
  const JetTables& tab = JetTables::get(3, degree);
  JetD j(3, degree);
  std::vector<Expr> derivs(tab.exps.size());
  std::vector<double> factorial_inv(tab.exps.size());
  for (std::size_t r = 0; r < tab.exps.size(); ++r) {
    const auto& ex = tab.exps[r];
    if (r == 0) {
      derivs[0] = e;
      factorial_inv[0] = 1.0;
    } else {
      // Differentiate from the parent multi-index (first nonzero slot).
      int v = ex[0] > 0 ? 0 : (ex[1] > 0 ? 1 : 2);
      auto parent = ex;
      parent[v] -= 1;
      int pr = tab.rank(parent[0], parent[1], parent[2]);
      derivs[r] = derivs[pr].diff(v);
      double fact = 1.0;
      for (int k = 0; k < 3; ++k)
        for (int m = 2; m <= ex[k]; ++m) fact *= m;
      factorial_inv[r] = 1.0 / fact;
    }
    j.raw(static_cast<int>(r)) = derivs[r].eval(center) * factorial_inv[r];
  }
  return j;
}

std::string jet_table_string(const JetD& j) {
  std::string out;
  char buf[96];
  const auto& tab = j.tables();
  for (std::size_t r = 0; r < j.size(); ++r) {
    double v = j.raw(static_cast<int>(r));
    if (v == 0.0) continue;
    const auto& e = tab.exps[r];
    std::snprintf(buf, sizeof buf, "%d %d %d %.17g\n", e[0], e[1], e[2], v);
    out += buf;
  }
  return out;
}

}  // namespace magwell
