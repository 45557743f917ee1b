#include "osslab/audit.hpp"

namespace osslab::oracles {
namespace {

constexpr int kAuditLimit = 24;

void require_auditable(int width, const char* what) {
  if (width > kAuditLimit) {
    throw ResourceError(std::string("exhaustive audit of ") + what + " needs 2^" +
                        std::to_string(width) + " evaluations");
  }
}

}  // namespace

void AuditResult::record(bool passed, const std::string& what) {
  ++checks;
  if (passed) return;
  if (failures == 0) first_failure = what;
  ++failures;
}

AuditResult audit_oss(const OssInstance& inst) {
  const OssParams& p = inst.params();
  if (p.n > 12) throw ResourceError("exhaustive OSS audit is limited to n <= 12");
  require_auditable(p.r + p.k, "(y, v) pairs");
  AuditResult res;

  for (std::uint64_t x = 0; x < (std::uint64_t{1} << p.n); ++x) {
    const std::uint64_t image = inst.permutation().forward(x);
    const std::uint64_t y = image & low_mask(p.r);
    const gf2::Vector z(p.coset_dim(), image >> p.r);
    const std::uint64_t v = (inst.A(y) * z + inst.b(y)).bits();
    const auto [py, pv] = inst.P(x);
    res.record(py == y && pv == v, "P(" + std::to_string(x) + ") disagrees with the secrets");
    const auto back = inst.Pinv(py, pv);
    res.record(back && *back == x, "Pinv(P(" + std::to_string(x) + ")) != x");
    const std::uint64_t disp = inst.dispatch(dispatch_input_for_x(p, x));
    res.record(disp == bottom_encode(y | (v << p.r), p.r + p.k, true),
               "dispatch(P, " + std::to_string(x) + ") disagrees with P");
  }

  for (std::uint64_t y = 0; y < (std::uint64_t{1} << p.r); ++y) {
    const gf2::Matrix& a = inst.A(y);
    const gf2::Vector& b = inst.b(y);
    res.record(gf2::rank(a) == p.coset_dim(), "A_" + std::to_string(y) + " is rank deficient");
    for (std::uint64_t vb = 0; vb < (std::uint64_t{1} << p.k); ++vb) {
      const gf2::Vector v(p.k, vb);
      const std::string at = "(y=" + std::to_string(y) + ", v=" + v.to_string() + ")";
      const bool dual = gf2::dual_membership(a, v) && !v.is_zero();
      res.record(inst.D(y, vb) == dual, "D wrong at " + at);
      const auto coords = gf2::solve_in_colspan(a, v + b);
      const bool in_coset = coords.has_value();
      std::optional<std::uint64_t> expected_x;
      if (in_coset) expected_x = inst.permutation().inverse(y | (coords->bits() << p.r));
      res.record(inst.Pinv(y, vb) == expected_x, "Pinv wrong at " + at);
      for (int m = 0; m < 2; ++m) {
        const bool d0 = in_coset && v.first() == (m == 1);
        res.record(inst.D0(y, m == 1, vb) == d0, "D0 wrong at " + at);
        res.record(!d0 || inst.Pinv(y, vb).has_value(), "D0 accepts outside the coset at " + at);
        res.record(inst.dispatch(dispatch_input(p, Sel::D0, y, vb, m == 1)) ==
                       bottom_encode(d0 ? 1 : 0, p.r + p.k, true),
                   "dispatch(D0) wrong at " + at);
      }
      res.record(inst.dispatch(dispatch_input(p, Sel::D, y, vb)) ==
                     bottom_encode(dual ? 1 : 0, p.r + p.k, true),
                 "dispatch(D) wrong at " + at);
      res.record(inst.dispatch(dispatch_input(p, Sel::Pinv, y, vb)) ==
                     (expected_x ? bottom_encode(*expected_x, p.r + p.k, true) : 0),
                 "dispatch(Pinv) wrong at " + at);
      const bool good = inst.is_good_key(y);
      bool any_first = false;
      for (const auto& c : a.columns()) any_first = any_first || c.first();
      if (vb == 0) res.record(good == any_first, "good-key flag wrong for y=" + std::to_string(y));
    }
  }
  return res;
}

AuditResult audit_keyfire(const KeyFireInstance& inst) {
  const KeyFireParams& kp = inst.params();
  const OssParams& p = kp.oss;
  const int p2 = p.dispatch_in_width();
  const int aw = kp.attestation_width();
  const int o2_width = p.r + 2 * aw + p2;
  require_auditable(o2_width, "O2");
  require_auditable(p.r + p.k + p2, "O0/O1");
  AuditResult res;

  auto expect_att = [&](const RandomFunction& f, std::uint64_t ivk, std::uint64_t z) {
    return bottom_encode(f.table()[ivk | (z << p.r)], kp.att, true);
  };

  const OraclePtr& o0 = inst.O0_oracle();
  const OraclePtr& o1 = inst.O1_oracle();
  for (std::uint64_t in = 0; in < (std::uint64_t{1} << o0->in_width()); ++in) {
    const std::uint64_t ivk = in & low_mask(p.r);
    const std::uint64_t isig = (in >> p.r) & low_mask(p.k);
    const std::uint64_t z = in >> (p.r + p.k);
    const bool ok0 = inst.oss().D0(ivk, false, isig);
    const bool ok1 = inst.oss().D0(ivk, true, isig);
    res.record((*o0)(in) == (ok0 ? expect_att(inst.H0(), ivk, z) : 0), "O0 wrong at " + std::to_string(in));
    res.record((*o1)(in) == (ok1 ? expect_att(inst.H1(), ivk, z) : 0), "O1 wrong at " + std::to_string(in));
  }

  const OraclePtr& o2 = inst.O2_oracle();
  for (std::uint64_t in = 0; in < (std::uint64_t{1} << o2_width); ++in) {
    const std::uint64_t ivk = in & low_mask(p.r);
    const std::uint64_t y0 = (in >> p.r) & low_mask(aw);
    const std::uint64_t y1 = (in >> (p.r + aw)) & low_mask(aw);
    const std::uint64_t z = in >> (p.r + 2 * aw);
    const bool unlock = y0 == expect_att(inst.H0(), ivk, z) && y1 == expect_att(inst.H1(), ivk, z);
    const std::uint64_t out = (*o2)(in);
    res.record(out == (unlock ? inst.oss().dispatch(z) : 0), "O2 wrong at " + std::to_string(in));
    // O2 forwards the dispatch answer unchanged, including a dispatch bottom,
    // so the gate is observable exactly where dispatch(z) is not bottom.
    if (inst.oss().dispatch(z) != 0) {
      res.record((out != 0) == unlock, "O2 gate leaks at " + std::to_string(in));
    }
  }

  const OraclePtr& o3 = inst.O3_oracle();
  for (std::uint64_t in = 0; in < (std::uint64_t{1} << o3->in_width()); ++in) {
    const std::uint64_t ivk = in & low_mask(p.r);
    const std::uint64_t y0 = (in >> p.r) & low_mask(aw);
    const std::uint64_t y1 = (in >> (p.r + aw)) & low_mask(aw);
    const std::uint64_t m = in >> (p.r + 2 * aw);
    const bool unlock = y0 == expect_att(inst.H0(), ivk, m) && y1 == expect_att(inst.H1(), ivk, m);
    const std::uint64_t out = (*o3)(in);
    res.record(out == (unlock ? bottom_encode(inst.Hsig().table()[m], kp.sig, true) : 0),
               "O3 wrong at " + std::to_string(in));
    res.record((out != 0) == unlock, "O3 gate leaks at " + std::to_string(in));
  }

  const OraclePtr& o4 = inst.O4_oracle();
  for (std::uint64_t in = 0; in < (std::uint64_t{1} << o4->in_width()); ++in) {
    const std::uint64_t m = in & low_mask(kp.nu);
    const std::uint64_t y = in >> kp.nu;
    res.record((*o4)(in) == (inst.Hsig().table()[m] == y ? 1U : 0U), "O4 wrong at " + std::to_string(in));
  }
  return res;
}

}  // namespace osslab::oracles
