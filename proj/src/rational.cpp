#include "sushi/rational.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sushi {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

mpz_class parse_int(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw std::invalid_argument("malformed integer '" + std::string(s) + "'");
  mpz_class z(std::string(s), 10);
  return neg ? mpz_class(-z) : z;
}

}  // namespace

Rat::Rat(long num, long den) : q_(num, den) {
  if (den == 0) throw std::domain_error("Rat: zero denominator");
  q_.canonicalize();
}

Rat::Rat(mpz_class num, mpz_class den) {
  if (den == 0) throw std::domain_error("Rat: zero denominator");
  q_ = mpq_class(num, den);
  q_.canonicalize();
}

Rat& Rat::operator/=(const Rat& o) {
  if (o.q_ == 0) throw std::domain_error("Rat: division by zero");
  q_ /= o.q_;
  return *this;
}

Rat Rat::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty rational literal");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    mpz_class den = parse_int(text.substr(slash + 1));
    if (den <= 0) throw std::invalid_argument("rational literal needs a positive denominator");
    return Rat(parse_int(text.substr(0, slash)), den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool neg = !whole.empty() && whole.front() == '-';
    if (!frac.empty() && !all_digits(frac)) {
      throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
    }
    std::string_view digits = whole;
    if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) digits.remove_prefix(1);
    mpz_class ipart = digits.empty() ? mpz_class(0) : parse_int(digits);
    mpz_class scale = 1;
    mpz_class fpart = 0;
    if (!frac.empty()) {
      mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
      fpart = mpz_class(std::string(frac), 10);
    }
    Rat r(mpz_class(ipart * scale + fpart), scale);
    return neg ? -r : r;
  }
  return Rat(parse_int(text));
}

Rat Rat::from_double(double value) {
  if (!std::isfinite(value)) throw std::domain_error("Rat::from_double: non-finite value");
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), value);
  return Rat(std::move(q));
}

Rat Rat::snap_dyadic(double value, unsigned bits) {
  if (!std::isfinite(value)) throw std::domain_error("Rat::snap_dyadic: non-finite value");
  double scaled = std::floor(std::ldexp(value, static_cast<int>(bits)));
  mpz_class n;
  mpz_set_d(n.get_mpz_t(), scaled);
  mpz_class d;
  mpz_ui_pow_ui(d.get_mpz_t(), 2, bits);
  return Rat(std::move(n), std::move(d));
}

mpz_class Rat::floor() const {
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), q_.get_num_mpz_t(), q_.get_den_mpz_t());
  return out;
}

std::string Rat::str() const {
  if (is_integer()) return q_.get_num().get_str();
  return q_.get_num().get_str() + "/" + q_.get_den().get_str();
}

std::ostream& operator<<(std::ostream& os, const Rat& r) { return os << r.str(); }

}  // namespace sushi
