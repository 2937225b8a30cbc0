#pragma once

#include <cmath>
#include <string>

#include "mancv/errors.hpp"

namespace mancv {

enum class LossType { square, hinge, huber };

/// Training loss. The huber variant is the differentiable hinge surrogate
/// with band half-width h: it agrees with the hinge outside |1 - yt| <= h and
/// interpolates quadratically inside, so sup |huber - hinge| = h/4.
struct LossKind {
  LossType type = LossType::square;
  double h = 0.0;  // huber only

  static LossKind square() { return {LossType::square, 0.0}; }
  static LossKind hinge() { return {LossType::hinge, 0.0}; }
  static LossKind huber(double h) {
    if (!(h > 0.0)) throw argument_error("huber: h must be > 0");
    return {LossType::huber, h};
  }

  bool differentiable() const { return type != LossType::hinge; }
};

enum class ValidationKind { zero_one, square };

namespace detail {
inline void require_pm1(double y, const char* who) {
  if (y != 1.0 && y != -1.0)
    throw argument_error(std::string(who) + ": label must be +1 or -1");
}
}  // namespace detail

inline double loss_eval(const LossKind& L, double y, double t) {
  switch (L.type) {
    case LossType::square: {
      const double r = t - y;
      return r * r;
    }
    case LossType::hinge: {
      detail::require_pm1(y, "hinge loss");
      const double m = 1.0 - y * t;
      return m > 0.0 ? m : 0.0;
    }
    case LossType::huber: {
      detail::require_pm1(y, "huber loss");
      // Ordered, gap-free branches; both band boundaries land in the
      // quadratic branch (roundoff in |1 - yt| <= h would otherwise let a
      // boundary point fall through to the wrong outer branch).
      const double yt = y * t;
      if (yt > 1.0 + L.h) return 0.0;
      if (yt < 1.0 - L.h) return 1.0 - yt;
      const double z = 1.0 + L.h - yt;
      return z * z / (4.0 * L.h);
    }
  }
  return 0.0;
}

/// First derivative in the second argument. The hinge is rejected: the BIF
/// machinery needs twice-differentiable losses.
inline double loss_d1(const LossKind& L, double y, double t) {
  switch (L.type) {
    case LossType::square:
      return 2.0 * (t - y);
    case LossType::hinge:
      throw unsupported_loss_error("hinge loss has no derivative; use huber");
    case LossType::huber: {
      detail::require_pm1(y, "huber loss");
      const double yt = y * t;
      if (yt > 1.0 + L.h) return 0.0;
      if (yt < 1.0 - L.h) return -y;
      return -y * (1.0 + L.h - yt) / (2.0 * L.h);
    }
  }
  return 0.0;
}

inline double loss_d2(const LossKind& L, double y, double t) {
  switch (L.type) {
    case LossType::square:
      return 2.0;
    case LossType::hinge:
      throw unsupported_loss_error("hinge loss has no derivative; use huber");
    case LossType::huber: {
      detail::require_pm1(y, "huber loss");
      const double yt = y * t;
      if (yt > 1.0 + L.h || yt < 1.0 - L.h) return 0.0;
      return 1.0 / (2.0 * L.h);
    }
  }
  return 0.0;
}

/// Validation loss V. sign(0) counts as +1 for the 0-1 loss.
inline double validation_loss(ValidationKind V, double y, double pred) {
  switch (V) {
    case ValidationKind::zero_one: {
      detail::require_pm1(y, "0-1 loss");
      const double s = pred >= 0.0 ? 1.0 : -1.0;
      return s == y ? 0.0 : 1.0;
    }
    case ValidationKind::square: {
      const double r = pred - y;
      return r * r;
    }
  }
  return 0.0;
}

}  // namespace mancv
