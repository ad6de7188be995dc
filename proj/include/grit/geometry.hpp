#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace grit {

struct Point {
    double x{0.0};
    double y{0.0};

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator*(Point a, double k) { return {a.x * k, a.y * k}; }
    friend constexpr Point operator*(double k, Point a) { return {a.x * k, a.y * k}; }
    friend constexpr bool operator==(Point, Point) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }
inline Point unit_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    if (r > std::numbers::pi) r -= two_pi;
    return r;
}

/// Wraps an angle into [-pi, pi).
inline double wrap_angle_half_open(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(a, two_pi);
    if (r < -std::numbers::pi) r += two_pi;
    if (r >= std::numbers::pi) r -= two_pi;
    return r;
}

/// Closest point on a polyline to a query point.
struct Projection {
    double s{0.0};         ///< arclength of the closest point
    double distance{0.0};  ///< perpendicular (Euclidean) distance to it
    double heading{0.0};   ///< tangent direction of the segment holding it
    Point point{};
    std::size_t segment{0};
};

/// Piecewise-linear curve with cached cumulative arclength.
class Polyline {
public:
    Polyline() = default;

    explicit Polyline(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
        cumulative_.reserve(points_.size());
        cumulative_.push_back(0.0);
        for (std::size_t i = 1; i < points_.size(); ++i) {
            const Point& p = points_[i];
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw std::invalid_argument("polyline has non-finite coordinates");
            cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], p));
        }
        if (!std::isfinite(points_[0].x) || !std::isfinite(points_[0].y))
            throw std::invalid_argument("polyline has non-finite coordinates");
        if (!(length() > 0.0)) throw std::invalid_argument("polyline has zero length");
    }

    const std::vector<Point>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double length() const { return cumulative_.back(); }
    double arclength_at_vertex(std::size_t i) const { return cumulative_[i]; }

    double segment_heading(std::size_t seg) const {
        const Point d = points_[seg + 1] - points_[seg];
        return std::atan2(d.y, d.x);
    }

    Projection project(Point p) const {
        Projection best;
        best.distance = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
            const Point a = points_[i];
            const Point d = points_[i + 1] - a;
            const double len2 = dot(d, d);
            double u = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
            u = std::clamp(u, 0.0, 1.0);
            const Point q = a + d * u;
            const double dist = distance(p, q);
            if (dist < best.distance) {
                best.distance = dist;
                best.point = q;
                best.segment = i;
                best.s = cumulative_[i] + u * (cumulative_[i + 1] - cumulative_[i]);
            }
        }
        best.heading = segment_heading(best.segment);
        return best;
    }

    std::size_t segment_at(double s) const {
        if (s <= 0.0) return 0;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
        std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
        if (idx == 0) return 0;
        return std::min(idx - 1, points_.size() - 2);
    }

    Point point_at(double s) const {
        s = std::clamp(s, 0.0, length());
        const std::size_t seg = segment_at(s);
        const double seg_len = cumulative_[seg + 1] - cumulative_[seg];
        const double u = seg_len > 0.0 ? (s - cumulative_[seg]) / seg_len : 0.0;
        return points_[seg] + (points_[seg + 1] - points_[seg]) * u;
    }

    double heading_at(double s) const { return segment_heading(segment_at(std::clamp(s, 0.0, length()))); }

    /// First crossing with another polyline in this polyline's arclength order,
    /// returned as (s on this, s on other).
    std::optional<std::pair<double, double>> first_intersection(const Polyline& other) const {
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
            const Point a = points_[i];
            const Point r = points_[i + 1] - a;
            std::optional<std::pair<double, double>> hit;
            double best_u = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j + 1 < other.points_.size(); ++j) {
                const Point b = other.points_[j];
                const Point q = other.points_[j + 1] - b;
                const double denom = cross(r, q);
                if (std::abs(denom) < 1e-12) continue;
                const double u = cross(b - a, q) / denom;
                const double v = cross(b - a, r) / denom;
                if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) continue;
                if (u < best_u) {
                    best_u = u;
                    hit = std::pair{cumulative_[i] + u * (cumulative_[i + 1] - cumulative_[i]),
                                    other.cumulative_[j] + v * (other.cumulative_[j + 1] - other.cumulative_[j])};
                }
            }
            if (hit) return hit;
        }
        return std::nullopt;
    }

private:
    std::vector<Point> points_;
    std::vector<double> cumulative_;
};

}  // namespace grit
