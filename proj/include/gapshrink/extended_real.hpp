#pragma once

#include <cmath>
#include <limits>
#include <ostream>

namespace gapshrink {

/// A real number or +infinity. Gap and conjugate values live here: indicator
/// penalties evaluate to +inf off their set, and +inf absorbs any finite
/// summand.
class ExtendedReal {
  public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : value_(v), infinite_(false) {}

    static constexpr ExtendedReal infinity() {
        ExtendedReal r;
        r.infinite_ = true;
        return r;
    }

    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_infinite() const { return infinite_; }

    /// Finite payload; meaningless when infinite.
    constexpr double value() const { return value_; }

    /// Finite value or +inf as a plain double.
    double to_double() const {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    constexpr ExtendedReal &operator+=(const ExtendedReal &o) {
        if (infinite_ || o.infinite_)
            *this = infinity();
        else
            value_ += o.value_;
        return *this;
    }
    friend constexpr ExtendedReal operator+(ExtendedReal a, const ExtendedReal &b) {
        a += b;
        return a;
    }
    /// Scaling by a nonnegative factor. 0 * inf stays inf; callers never
    /// rely on that product.
    friend constexpr ExtendedReal operator*(double s, const ExtendedReal &a) {
        return a.infinite_ ? infinity() : ExtendedReal(s * a.value_);
    }

    friend constexpr bool operator<(const ExtendedReal &a, double b) {
        return !a.infinite_ && a.value_ < b;
    }
    friend constexpr bool operator<=(const ExtendedReal &a, double b) {
        return !a.infinite_ && a.value_ <= b;
    }
    friend constexpr bool operator>=(const ExtendedReal &a, double b) { return !(a < b); }
    friend constexpr bool operator>(const ExtendedReal &a, double b) { return !(a <= b); }

    friend std::ostream &operator<<(std::ostream &os, const ExtendedReal &a) {
        if (a.infinite_)
            return os << "+inf";
        return os << a.value_;
    }

  private:
    double value_ = 0.0;
    bool infinite_ = false;
};

} // namespace gapshrink
