#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ffloer/rational.hpp"

namespace ffloer {

/// Element of the coefficient field: the perfect closure of F_p((u)),
/// stored as a finite map {exponent -> coefficient mod p} together with a
/// guaranteed precision.  Exponents are rationals whose denominator is a
/// power of p; the element is known exactly modulo u^prec (prec absent
/// means the element is exact).
///
/// The p-th root automorphism sigma divides exponents by p; its inverse is
/// the Frobenius x -> x^p.  The valuation v is the least stored exponent,
/// +infinity for an element that is zero to its precision.  The norm is
/// rho^v with rho fixed to 1/e, so -log|x| = v(x).
class PerfElem {
public:
    using Prec = std::optional<Rational>; // nullopt = exact

    explicit PerfElem(int p) : p_(p) { check_prime(p); }

    static PerfElem zero(int p) { return PerfElem(p); }
    static PerfElem one(int p) { return monomial(p, Rational(0), 1); }
    /// c * u^e
    static PerfElem monomial(int p, const Rational& e, long long c = 1) {
        PerfElem x(p);
        int cm = mod_p(c, p);
        if (cm != 0) {
            check_exponent(e, p);
            x.terms_[e] = cm;
        }
        return x;
    }
    static PerfElem from_int(int p, long long n) { return monomial(p, Rational(0), n); }

    int characteristic() const { return p_; }
    const std::map<Rational, int>& terms() const { return terms_; }
    const Prec& precision() const { return prec_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_exact() const { return !prec_.has_value(); }

    /// v(x); nullopt encodes +infinity (zero to precision).
    std::optional<Rational> valuation() const {
        if (terms_.empty()) return std::nullopt;
        return terms_.begin()->first;
    }
    /// rho^v with rho = 1/e; 0 for (numerical) zero.
    double norm() const {
        auto v = valuation();
        if (!v) return 0.0;
        return std::exp(-v->to_double());
    }
    bool in_maximal_ideal() const {
        auto v = valuation();
        return v && v->sign() > 0;
    }

    friend PerfElem operator+(const PerfElem& a, const PerfElem& b) {
        a.check_compatible(b);
        PerfElem r(a.p_);
        r.prec_ = min_prec(a.prec_, b.prec_);
        r.terms_ = a.terms_;
        for (const auto& [e, c] : b.terms_) {
            int s = mod_p(r.terms_[e] + c, a.p_);
            if (s == 0) r.terms_.erase(e); else r.terms_[e] = s;
        }
        r.enforce_precision();
        return r;
    }
    friend PerfElem operator-(const PerfElem& a, const PerfElem& b) { return a + b.negated(); }
    friend PerfElem operator*(const PerfElem& a, const PerfElem& b) {
        a.check_compatible(b);
        PerfElem r(a.p_);
        r.prec_ = mul_prec(a, b);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Rational e = ea + eb;
                int s = mod_p(r.terms_[e] + ca * cb, a.p_);
                if (s == 0) r.terms_.erase(e); else r.terms_[e] = s;
            }
        r.enforce_precision();
        return r;
    }

    PerfElem negated() const {
        PerfElem r(p_);
        r.prec_ = prec_;
        for (const auto& [e, c] : terms_) r.terms_[e] = p_ - c;
        return r;
    }

    /// sigma^j: exponents and precision scale by p^{-j}.  sigma^{-1} is the
    /// Frobenius x -> x^p, which in characteristic p is exact on sums.
    PerfElem sigma(int j) const {
        if (j == 0) return *this;
        Rational scale = pow_rational(p_, -j);
        PerfElem r(p_);
        if (prec_) r.prec_ = *prec_ * scale;
        for (const auto& [e, c] : terms_) r.terms_[e * scale] = c;
        return r;
    }

    /// x^n for n >= 0 (repeated squaring; p-th powers are cheap via sigma).
    PerfElem pow(long long n) const {
        if (n < 0) throw std::invalid_argument("PerfElem::pow: negative exponent, use inverse()");
        PerfElem acc = one(p_);
        PerfElem base = *this;
        while (n > 0) {
            if (n & 1) acc = acc * base;
            base = base * base;
            n >>= 1;
        }
        return acc;
    }

    /// Multiplicative inverse computed to precision `target` (absolute).
    /// Requires the element to be nonzero to its precision.
    PerfElem inverse(const Rational& target) const {
        auto v = valuation();
        if (!v) throw std::domain_error("PerfElem::inverse: zero element");
        // x = c u^v (1 + w), v(w) > 0:  1/x = c^{-1} u^{-v} sum (-w)^k
        auto lead = *terms_.begin();
        PerfElem lead_inv = monomial(p_, -lead.first, inv_mod_p(lead.second, p_));
        PerfElem w = (*this * lead_inv) - one(p_); // valuation > 0
        Rational rel = target + *v;                // relative precision needed
        PerfElem geo = one(p_);
        PerfElem pw = one(p_);
        if (!w.is_zero()) {
            Rational vw = *w.valuation();
            for (Rational acc = vw; acc < rel; acc += vw) {
                pw = (pw * w.negated()).truncated(rel);
                if (pw.is_zero()) break;
                geo = geo + pw;
            }
        }
        PerfElem r = (lead_inv * geo).truncated(target);
        if (!r.prec_ || *r.prec_ > target) r.prec_ = target;
        return r;
    }

    /// Drops terms with exponent >= cut and caps the precision there.
    PerfElem truncated(const Rational& cut) const {
        PerfElem r(p_);
        r.prec_ = prec_ ? min_prec(prec_, Prec(cut)) : Prec(cut);
        for (const auto& [e, c] : terms_)
            if (e < cut) r.terms_[e] = c;
        return r;
    }

    /// Equality modulo the smaller of the two precisions.
    friend bool eq_to_precision(const PerfElem& a, const PerfElem& b) {
        PerfElem d = a - b;
        return d.is_zero();
    }
    /// Structural equality: same terms and same precision.
    friend bool operator==(const PerfElem& a, const PerfElem& b) {
        return a.p_ == b.p_ && a.terms_ == b.terms_ && a.prec_ == b.prec_;
    }
    friend bool operator!=(const PerfElem& a, const PerfElem& b) { return !(a == b); }

    std::string str() const {
        if (terms_.empty()) return prec_ ? "O(u^" + prec_->str() + ")" : "0";
        std::string s;
        for (const auto& [e, c] : terms_) {
            if (!s.empty()) s += " + ";
            if (e.is_zero()) { s += std::to_string(c); continue; }
            if (c != 1) s += std::to_string(c) + "*";
            s += "u^" + e.str();
        }
        if (prec_) s += " + O(u^" + prec_->str() + ")";
        return s;
    }
    friend std::ostream& operator<<(std::ostream& os, const PerfElem& x) { return os << x.str(); }

    static int mod_p(long long c, int p) {
        long long r = c % p;
        return static_cast<int>(r < 0 ? r + p : r);
    }
    static int inv_mod_p(int c, int p) {
        int r = 1, b = mod_p(c, p);
        if (b == 0) throw std::domain_error("inv_mod_p: zero");
        for (int e = p - 2; e > 0; e >>= 1) {
            if (e & 1) r = r * b % p;
            b = b * b % p;
        }
        return r;
    }

private:
    void check_compatible(const PerfElem& o) const {
        if (p_ != o.p_)
            throw std::invalid_argument("PerfElem: mismatched characteristic p");
    }
    static void check_prime(int p) {
        if (p < 2) throw std::invalid_argument("PerfElem: p must be a prime >= 2");
        for (int d = 2; d * d <= p; ++d)
            if (p % d == 0) throw std::invalid_argument("PerfElem: p is not prime");
    }
    static void check_exponent(const Rational& e, int p) {
        long long d = e.den();
        while (d % p == 0) d /= p;
        if (d != 1)
            throw std::invalid_argument("PerfElem: exponent denominator is not a power of p");
    }

    static Prec min_prec(const Prec& a, const Prec& b) {
        if (!a) return b;
        if (!b) return a;
        return *a < *b ? a : b;
    }
    // Error term of a product: x ey + y ex + ex ey.
    static Prec mul_prec(const PerfElem& a, const PerfElem& b) {
        Prec r; // infinity
        auto va = a.valuation(), vb = b.valuation();
        if (a.prec_ && vb) r = min_prec(r, Prec(*a.prec_ + *vb));
        if (b.prec_ && va) r = min_prec(r, Prec(*b.prec_ + *va));
        if (a.prec_ && b.prec_) r = min_prec(r, Prec(*a.prec_ + *b.prec_));
        return r;
    }
    void enforce_precision() {
        if (!prec_) return;
        auto it = terms_.lower_bound(*prec_);
        terms_.erase(it, terms_.end());
    }

    int p_;
    std::map<Rational, int> terms_;
    Prec prec_;
};

/// (v(x), rho^{v(x)}) with v = nullopt meaning +infinity.
inline std::pair<std::optional<Rational>, double> valuation_norm(const PerfElem& x) {
    return {x.valuation(), x.norm()};
}

inline PerfElem sigma_pow(const PerfElem& x, int j) { return x.sigma(j); }

/// Solves sigma(x) - x = b for b in the maximal ideal (v(b) > 0), to
/// precision u_prec.  Substituting x = y^p turns the equation into the
/// fixed-point problem y = y^p + b, an ultrametric contraction on v >= v(b);
/// the iteration starts at y = b and squares the error each round.
inline PerfElem artin_schreier_solve(const PerfElem& b, const Rational& u_prec) {
    auto vb = b.valuation();
    if (!vb) return PerfElem::zero(b.characteristic()).truncated(u_prec);
    if (vb->sign() <= 0)
        throw std::domain_error("artin_schreier_solve: v(b) <= 0, iteration does not contract");
    PerfElem y = b.truncated(u_prec);
    for (int guard = 0;; ++guard) {
        PerfElem next = (y.sigma(-1) + b).truncated(u_prec);
        if (eq_to_precision(next, y)) break;
        if (guard > 200) throw std::runtime_error("artin_schreier_solve: no convergence");
        y = next;
    }
    return y.sigma(-1); // x = y^p
}

} // namespace ffloer
