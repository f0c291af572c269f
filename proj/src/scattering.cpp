// scattering.cpp - step and transfer-matrix Dirac scattering coefficients
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include "qdd/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace qdd {

namespace {

// Guard band around cone apices E = V_seg where the chirality is undefined.
constexpr double kApexGuard = 1e-9;

using cplx = std::complex<double>;

// Longitudinal wavenumber in a region with potential V: k^2 = (E-V)^2 - p_y^2.
// Returns a real k for propagating states and +i*kappa for evanescent ones.
cplx longitudinal_k(double E, double V, double p_y) {
  const double loc = E - V;
  const double disc = loc * loc - p_y * p_y;
  if (disc >= 0.0) return cplx(std::sqrt(disc), 0.0);
  return cplx(0.0, std::sqrt(-disc));
}

// Two-component amplitude spinor for wavenumber k (possibly complex):
// chi = (1, (k + i p_y)/(E - V)).
void spinor(double E, double V, cplx k, double p_y, cplx& lower) {
  lower = (k + cplx(0.0, 1.0) * p_y) / (E - V);
}

}  // namespace

void PotentialProfile::validate() const {
  for (const auto& seg : segments) {
    if (!(seg.width > 0.0)) throw std::domain_error("profile segment widths must be > 0");
    if (!std::isfinite(seg.value)) throw std::domain_error("profile segment values must be finite");
  }
  if (!std::isfinite(delta_V)) throw std::domain_error("profile delta_V must be finite");
}

StepCoefficients step_coefficients(double E, double phi, double delta_V) {
  if (std::abs(E) < kApexGuard || std::abs(E - delta_V) < kApexGuard) {
    throw std::domain_error("step_coefficients: energy at a cone apex (chirality undefined)");
  }
  if (!(phi > -M_PI / 2) || !(phi < M_PI / 2)) {
    throw std::domain_error("step_coefficients: incidence angle must lie in (-pi/2, pi/2)");
  }
  StepCoefficients out;
  const double lhs = std::abs(E * std::sin(phi));
  if (lhs >= std::abs(E - delta_V)) {
    out.T = 0.0;
    out.R = 1.0;
    return out;
  }
  const double sin_theta = E * std::sin(phi) / (E - delta_V);
  const double theta = std::asin(sin_theta);
  out.theta = theta;
  out.T = 2.0 * std::cos(phi) * std::cos(theta) / (1.0 + std::cos(phi + theta));
  out.R = 1.0 - out.T;
  return out;
}

std::pair<double, double> transfer_matrix_coefficients(const PotentialProfile& profile,
                                                       double E, double p_y) {
  profile.validate();
  const double dV = profile.delta_V;
  if (std::abs(E) < kApexGuard || std::abs(E - dV) < kApexGuard) {
    throw std::domain_error("transfer_matrix_coefficients: exterior cone apex");
  }
  for (const auto& seg : profile.segments) {
    if (std::abs(E - seg.value) < kApexGuard) {
      throw std::domain_error("transfer_matrix_coefficients: energy at a segment cone apex");
    }
  }
  // Evanescent exterior: no propagating scattering channel.
  if (std::abs(E) <= std::abs(p_y) || std::abs(E - dV) <= std::abs(p_y)) {
    return {0.0, 1.0};
  }
  // Deep tunneling: T ~ e^{-2 sum kappa w} underflows long before the
  // matching matrices overflow; report an opaque interface instead.
  double tunnel_exponent = 0.0;
  for (const auto& seg : profile.segments) {
    const double loc = E - seg.value;
    const double disc = p_y * p_y - loc * loc;
    if (disc > 0.0) tunnel_exponent += std::sqrt(disc) * seg.width;
  }
  if (tunnel_exponent > 280.0) return {0.0, 1.0};

  // Region list: exterior left (V=0), segments, exterior right (V=dV).
  std::vector<double> V = {0.0};
  for (const auto& seg : profile.segments) V.push_back(seg.value);
  V.push_back(dV);
  const int n_regions = static_cast<int>(V.size());

  // Right-moving exterior wavenumbers carry the sign of the chirality so
  // that the group velocity points in +x.
  const double sL = (E > 0.0) ? 1.0 : -1.0;
  const double sR = (E - dV > 0.0) ? 1.0 : -1.0;
  const double qL = std::sqrt(E * E - p_y * p_y);
  const double qR = std::sqrt((E - dV) * (E - dV) - p_y * p_y);
  const cplx kL = cplx(sL * qL, 0.0);
  const cplx kR = cplx(sR * qR, 0.0);

  // Region wavenumbers: exterior ones carry the chirality sign (so column
  // "+k" is the right-moving wave there); interior regions use the principal
  // branch, the ±k pair spans the same basis either way.
  std::vector<cplx> kreg(n_regions);
  kreg[0] = kL;
  kreg[n_regions - 1] = kR;
  for (int r = 1; r + 1 < n_regions; ++r) {
    kreg[r] = longitudinal_k(E, V[r], p_y);
    if (std::abs(kreg[r]) < 1e-12) {
      throw std::domain_error("transfer_matrix_coefficients: grazing degeneracy in a segment");
    }
  }

  // Amplitudes (a, b) multiply the (+k, -k) basis in each region; matching
  // the two-component wave function at every jump gives a cumulative 2x2 map
  // (a_0, b_0) -> (a_N, b_N).
  cplx M11(1.0, 0.0), M12(0.0, 0.0), M21(0.0, 0.0), M22(1.0, 0.0);
  double x = 0.0;
  for (int r = 0; r + 1 < n_regions; ++r) {
    const cplx k_a = kreg[r];
    const cplx k_b = kreg[r + 1];

    cplx la_p, la_m, lb_p, lb_m;
    spinor(E, V[r], k_a, p_y, la_p);
    spinor(E, V[r], -k_a, p_y, la_m);
    spinor(E, V[r + 1], k_b, p_y, lb_p);
    spinor(E, V[r + 1], -k_b, p_y, lb_m);

    const cplx I(0.0, 1.0);
    const cplx ea_p = std::exp(I * k_a * x);
    const cplx ea_m = std::exp(-I * k_a * x);
    const cplx eb_p = std::exp(I * k_b * x);
    const cplx eb_m = std::exp(-I * k_b * x);

    // [eb_p, eb_m; lb_p eb_p, lb_m eb_m] (a',b')^T = [ea_p, ea_m; ...] (a,b)^T
    const cplx A11 = ea_p, A12 = ea_m, A21 = la_p * ea_p, A22 = la_m * ea_m;
    const cplx B11 = eb_p, B12 = eb_m, B21 = lb_p * eb_p, B22 = lb_m * eb_m;
    const cplx det = B11 * B22 - B12 * B21;
    const cplx C11 = (B22 * A11 - B12 * A21) / det;
    const cplx C12 = (B22 * A12 - B12 * A22) / det;
    const cplx C21 = (-B21 * A11 + B11 * A21) / det;
    const cplx C22 = (-B21 * A12 + B11 * A22) / det;

    const cplx N11 = C11 * M11 + C12 * M21;
    const cplx N12 = C11 * M12 + C12 * M22;
    const cplx N21 = C21 * M11 + C22 * M21;
    const cplx N22 = C21 * M12 + C22 * M22;
    M11 = N11; M12 = N12; M21 = N21; M22 = N22;

    if (r + 1 < n_regions - 1) x += profile.segments[r].width;
  }

  // Incident from the left: (a_0, b_0) = (1, r), (a_N, b_N) = (t, 0).
  const cplx refl = -M21 / M22;
  const cplx trans = M11 + M12 * refl;

  const double flux_in = qL / std::abs(E);
  const double flux_out = qR / std::abs(E - dV);
  double T = std::norm(trans) * flux_out / flux_in;
  double R = std::norm(refl);
  return {T, R};
}

std::optional<PhaseState> partner_state(const PhaseState& z, int from_side, double delta_V) {
  const int j = (from_side == 1) ? 2 : 1;
  const double dir = (j == 2) ? 1.0 : -1.0;  // (-1)^j
  const double E = z.energy();
  const double Ep = E - dir * delta_V;
  const double py = z.p_y();
  if (Ep == 0.0 || std::abs(Ep) <= std::abs(py)) return std::nullopt;
  PhaseState out;
  out.s = (Ep > 0.0) ? +1 : -1;
  out.p_mod = std::abs(Ep);
  // transmission preserves the direction of motion: sign(p_x') = sign(p_x)
  const double px = ((z.p_x() >= 0.0) ? 1.0 : -1.0) * std::sqrt(Ep * Ep - py * py);
  out.phi = std::atan2(py, px);
  if (out.phi < 0.0) out.phi += 2.0 * M_PI;
  return out;
}

ScatteringTable::ScatteringTable(PotentialProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
}

double ScatteringTable::transmission(int side, double E, double p_y) const {
  // Local energy on side 1 of the pair; side 2 sees the profile from the
  // right, i.e. its energy is shifted by -delta_V relative to side 1.
  const double E1 = (side == 1) ? E : E + profile_.delta_V;
  if (std::abs(E1) <= std::abs(p_y) || std::abs(E1 - profile_.delta_V) <= std::abs(p_y)) {
    return 0.0;
  }
  if (std::abs(E1) < kApexGuard || std::abs(E1 - profile_.delta_V) < kApexGuard) return 0.0;

  if (profile_.is_pure_step()) {
    if (side == 1) {
      const double phi = std::asin(p_y / E1);
      return step_coefficients(E1, phi, profile_.delta_V).T;
    }
    // from the right the step has height -delta_V measured from the local zero
    const double E2 = E;
    const double phi = std::asin(p_y / E2);
    return step_coefficients(E2, phi, -profile_.delta_V).T;
  }

  if (side == 1) return transfer_matrix_coefficients(profile_, E1, p_y).first;

  // reversed profile as seen from the right, values measured from delta_V
  PotentialProfile rev;
  rev.delta_V = -profile_.delta_V;
  for (auto it = profile_.segments.rbegin(); it != profile_.segments.rend(); ++it) {
    rev.segments.push_back({it->width, it->value - profile_.delta_V});
  }
  return transfer_matrix_coefficients(rev, E, p_y).first;
}

std::string ScatteringReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " unitarity=" << max_unitarity
     << " bounds=" << max_bounds << " symmetry=" << max_symmetry
     << " reciprocity=" << max_reciprocity << " tol=" << tolerance;
  return os.str();
}

ScatteringReport validate_scattering(const ScatteringTable& table, int n_E, int n_py,
                                     double E_max) {
  ScatteringReport rep;
  rep.tolerance = table.closed_form() ? 1e-10 : 1e-8;
  const double dV = table.delta_V();
  for (int ie = 0; ie < n_E; ++ie) {
    // offset grid keeps clear of the apices E = 0 and E = delta_V
    const double E = -E_max + (2.0 * E_max) * (ie + 0.371) / n_E;
    if (std::abs(E) < 1e-6 || std::abs(E - dV) < 1e-6) continue;
    for (int ip = 0; ip < n_py; ++ip) {
      const double py = std::abs(E) * (ip + 0.5) / (n_py + 1);
      if (std::abs(E) <= py) continue;
      const double T1 = table.transmission(1, E, py);
      const double R1 = table.reflection(1, E, py);
      rep.max_unitarity = std::max(rep.max_unitarity, std::abs(T1 + R1 - 1.0));
      rep.max_bounds = std::max({rep.max_bounds, -T1, T1 - 1.0, -R1, R1 - 1.0});
      const double T1m = table.transmission(1, E, -py);
      rep.max_symmetry = std::max(rep.max_symmetry, std::abs(T1 - T1m));
      // reciprocity against the partner on side 2 when it propagates
      const double Ep = E - dV;
      if (std::abs(Ep) > py && std::abs(Ep) > 1e-6) {
        const double T2 = table.transmission(2, Ep, py);
        rep.max_reciprocity = std::max(rep.max_reciprocity, std::abs(T1 - T2));
      }
    }
  }
  rep.passed = rep.max_unitarity < rep.tolerance && rep.max_bounds < rep.tolerance &&
               rep.max_symmetry < rep.tolerance && rep.max_reciprocity < rep.tolerance;
  return rep;
}

}  // namespace qdd
