// Width profiles of the identity l_1^m -> l_2^m and of a random matrix,
// next to the asymptotic rates of the corresponding function-space embedding.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "widthlab/rates.hpp"
#include "widthlab/widths.hpp"

using namespace widthlab;

namespace {

void print_profiles(const char* title, const FiniteOperator& t, const OptimBudget& budget) {
  const int n_max = static_cast<int>(std::min(t.m_in(), t.m_out()));
  std::printf("%s\n%-14s", title, "kind");
  for (int n = 1; n <= n_max; ++n) std::printf("   n=%-6d", n);
  std::printf("\n");
  for (WidthKind kind : kAllWidthKinds) {
    const auto seq = width_profile(kind, t, n_max, budget);
    std::printf("%-14s", to_string(kind));
    for (const auto& e : seq) std::printf("  %9.6f%c", e.value, e.direction == Direction::exact ? ' ' : '*');
    std::printf("\n");
  }
  std::printf("(* estimated by search, otherwise exact)\n\n");
}

}  // namespace

int main() {
  const OptimBudget budget{32, 500, 1};
  const int m = 5;

  print_profiles("id: l_1^5 -> l_2^5", FiniteOperator::identity_of(m, Exponent(1), Exponent(2)), budget);
  std::printf("closed form b_m(id) = m^{-1/2} = %.6f\n\n", 1.0 / std::sqrt(double(m)));

  Rng rng = make_stream(7, 0x64656du);
  print_profiles("random 4x4 matrix, l_4 -> l_2", FiniteOperator(gaussian_matrix(rng, 4, 4), Exponent(4), Exponent(2)),
                 budget);

  const ParamSet p{2, 1.5, Exponent(1), Exponent(2), Exponent(2)};
  const auto b = bernstein_rate_mixed(p);
  const auto x = weyl_rate_mixed(p);
  std::printf("mixed smoothness d=2 t=1.5 p1=1 p2=2:\n");
  std::printf("  bernstein  n^-%g (log n)^%g  [%s]\n", b.alpha, (p.d - 1) * b.beta_hi, b.label().c_str());
  std::printf("  weyl       n^-%g (log n)^%g  [%s]\n", x.alpha, (p.d - 1) * x.beta_hi, x.label().c_str());
  std::printf("  bernstein decays faster: %s\n", rate_dominates(b, x, p.d) ? "yes" : "no");
  return 0;
}
