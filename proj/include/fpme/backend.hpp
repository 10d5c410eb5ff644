#pragma once

// Uniform handle over the three operator realizations. The spectral plan is
// always constructed: the singular-integral backend uses its multiplier as a
// preconditioner and the diagnostics use its energy form regardless of which
// backend drives the evolution.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpme/grid.hpp"
#include "fpme/riesz.hpp"
#include "fpme/spectral.hpp"

namespace fpme {

enum class BackendTag { spectral, riesz, dtn };

inline BackendTag parse_backend(const std::string& name) {
  if (name == "spectral") return BackendTag::spectral;
  if (name == "riesz") return BackendTag::riesz;
  if (name == "dtn") return BackendTag::dtn;
  throw std::invalid_argument("unknown backend '" + name + "'");
}

inline std::string backend_name(BackendTag t) {
  switch (t) {
    case BackendTag::spectral: return "spectral";
    case BackendTag::riesz: return "riesz";
    case BackendTag::dtn: return "dtn";
  }
  return "?";
}

struct OperatorOptions {
  RieszCorrection riesz_correction = RieszCorrection::quadratic;
  std::vector<double> dtn_levels = {5e-4, 1e-3};
};

class OperatorPlan {
 public:
  OperatorPlan(const GridSpec& g, BackendTag tag, const OperatorOptions& opt = {})
      : tag_(tag), spectral_(std::make_shared<SpectralPlan>(g)) {
    if (tag == BackendTag::riesz)
      riesz_ = std::make_shared<RieszPlan>(g, opt.riesz_correction);
    else if (tag == BackendTag::dtn)
      dtn_ = std::make_shared<DtnPlan>(g, opt.dtn_levels);
  }

  BackendTag tag() const { return tag_; }
  const GridSpec& grid() const { return spectral_->grid(); }
  const SpectralPlan& spectral() const { return *spectral_; }
  const RieszPlan& riesz() const {
    if (!riesz_) throw std::logic_error("operator: no riesz plan");
    return *riesz_;
  }

  Field apply(const Field& u) const {
    switch (tag_) {
      case BackendTag::spectral: return spectral_->apply(u);
      case BackendTag::riesz: return riesz_->apply(u);
      case BackendTag::dtn: return dtn_->apply(u);
    }
    throw std::logic_error("operator: bad tag");
  }

  // whether (a*Lambda + b*I)^-1 is available exactly (Fourier-diagonal symbol)
  bool diagonal() const { return tag_ != BackendTag::riesz; }

  Field diagonal_resolve(const Field& rhs, double a, double b) const {
    switch (tag_) {
      case BackendTag::spectral: return spectral_->diagonal_resolve(rhs, a, b);
      case BackendTag::dtn: return dtn_->diagonal_resolve(rhs, a, b);
      case BackendTag::riesz: break;
    }
    throw std::logic_error("operator: diagonal_resolve on a non-diagonal backend");
  }

  // quadratic form <u, Lambda u>; spectral form when the symbol is diagonal
  double energy_form(const Field& u) const {
    if (tag_ == BackendTag::spectral) return spectral_->seminorm_sq(u);
    return inner(u, apply(u));
  }

 private:
  BackendTag tag_;
  std::shared_ptr<SpectralPlan> spectral_;
  std::shared_ptr<RieszPlan> riesz_;
  std::shared_ptr<DtnPlan> dtn_;
};

}  // namespace fpme
