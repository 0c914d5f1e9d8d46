#include "ocs/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ocs/errors.hpp"

namespace ocs {

double BarrierSpec::left_edge() const {
    if (auto* r = std::get_if<Rectangular>(&shape)) return r->a;
    if (auto* d = std::get_if<DoubleRectangular>(&shape)) return d->a;
    return std::get<TabulatedSymmetric>(shape).x.front();
}

double BarrierSpec::right_edge() const {
    if (auto* r = std::get_if<Rectangular>(&shape)) return r->b;
    if (auto* d = std::get_if<DoubleRectangular>(&shape)) return d->a + 2.0 * d->d + d->l;
    return std::get<TabulatedSymmetric>(shape).x.back();
}

double BarrierSpec::top() const {
    if (auto* r = std::get_if<Rectangular>(&shape)) return r->V0;
    if (auto* d = std::get_if<DoubleRectangular>(&shape)) return d->V0;
    const auto& t = std::get<TabulatedSymmetric>(shape);
    return *std::max_element(t.V.begin(), t.V.end());
}

double BarrierSpec::potential(double x) const {
    if (auto* r = std::get_if<Rectangular>(&shape))
        return (x >= r->a && x <= r->b) ? r->V0 : 0.0;
    if (auto* d = std::get_if<DoubleRectangular>(&shape)) {
        double u = x - d->a;
        if (u < 0.0 || u > 2.0 * d->d + d->l) return 0.0;
        if (u <= d->d || u >= d->d + d->l) return d->V0;
        return 0.0;
    }
    const auto& t = std::get<TabulatedSymmetric>(shape);
    if (x <= t.x.front() || x >= t.x.back()) {
        // edges belong to the support; sampled value wins exactly at them
        if (x == t.x.front()) return t.V.front();
        if (x == t.x.back()) return t.V.back();
        return 0.0;
    }
    auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
    size_t i = static_cast<size_t>(it - t.x.begin());
    double w = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
    return t.V[i - 1] * (1.0 - w) + t.V[i] * w;
}

std::string BarrierSpec::describe() const {
    char buf[160];
    if (auto* r = std::get_if<Rectangular>(&shape)) {
        std::snprintf(buf, sizeof buf, "rect:%g,%g,%g", r->V0, r->a, r->b);
        return buf;
    }
    if (auto* d = std::get_if<DoubleRectangular>(&shape)) {
        std::snprintf(buf, sizeof buf, "double:%g,%g,%g,%g", d->V0, d->d, d->l, d->a);
        return buf;
    }
    const auto& t = std::get<TabulatedSymmetric>(shape);
    std::snprintf(buf, sizeof buf, "table:%zu samples on [%g, %g]", t.x.size(), t.x.front(), t.x.back());
    return buf;
}

static std::vector<double> split_numbers(const std::string& body, const std::string& what) {
    std::vector<double> vals;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t used = 0;
            double v = std::stod(tok, &used);
            while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) used++;
            if (used != tok.size()) throw std::invalid_argument(tok);
            vals.push_back(v);
        } catch (const std::exception&) {
            throw BadSpec("barrier field '" + tok + "' in '" + what + "' is not a number");
        }
    }
    return vals;
}

BarrierSpec parse_barrier(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw BadSpec("barrier '" + text + "' lacks a kind prefix (rect:, double:, table:)");
    std::string kind = text.substr(0, colon);
    std::string body = text.substr(colon + 1);
    if (kind == "rect") {
        auto v = split_numbers(body, text);
        if (v.size() != 3) throw BadSpec("rect barrier needs V0,a,b; got '" + body + "'");
        return BarrierSpec{Rectangular{v[0], v[1], v[2]}};
    }
    if (kind == "double") {
        auto v = split_numbers(body, text);
        if (v.size() != 4) throw BadSpec("double barrier needs V0,d,l,a; got '" + body + "'");
        return BarrierSpec{DoubleRectangular{v[0], v[1], v[2], v[3]}};
    }
    if (kind == "table") return load_tabulated_csv(body);
    throw BadSpec("unknown barrier kind '" + kind + "'");
}

BarrierSpec load_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadSpec("cannot open barrier table '" + path + "'");
    TabulatedSymmetric tab;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, V;
        if (!(ls >> x >> V)) {
            if (tab.x.empty()) continue; // tolerate a header row
            throw BadSpec("bad row in barrier table '" + path + "': " + line);
        }
        tab.x.push_back(x);
        tab.V.push_back(V);
    }
    if (tab.x.size() < 3) throw BadSpec("barrier table '" + path + "' needs at least 3 samples");
    for (size_t i = 1; i < tab.x.size(); i++)
        if (!(tab.x[i] > tab.x[i - 1]))
            throw BadSpec("barrier table x must be strictly increasing at row " + std::to_string(i));
    return BarrierSpec{std::move(tab)};
}

BarrierValidation validate_barrier(const BarrierSpec& spec, double tol) {
    BarrierValidation rep;
    if (auto* r = std::get_if<Rectangular>(&spec.shape)) {
        if (!(r->b > r->a))
            throw DegenerateGeometry("rectangular barrier needs b > a, got a=" + std::to_string(r->a) +
                                     " b=" + std::to_string(r->b));
        if (r->V0 < 0.0) throw BadSpec("barrier height must be non-negative");
    } else if (auto* d = std::get_if<DoubleRectangular>(&spec.shape)) {
        if (!(d->d > 0.0)) throw DegenerateGeometry("double barrier needs d > 0");
        if (d->l < 0.0) throw DegenerateGeometry("double barrier needs l >= 0");
        if (d->V0 < 0.0) throw BadSpec("barrier height must be non-negative");
    } else {
        const auto& t = std::get<TabulatedSymmetric>(spec.shape);
        if (!(t.x.back() > t.x.front())) throw DegenerateGeometry("tabulated barrier has zero width");
        double xc = 0.5 * (t.x.front() + t.x.back());
        double top = spec.top();
        double scale = top > 0.0 ? top : 1.0;
        double worst = 0.0;
        for (size_t i = 0; i < t.x.size(); i++) {
            double mirrored = spec.potential(2.0 * xc - t.x[i]);
            worst = std::max(worst, std::abs(mirrored - t.V[i]) / scale);
        }
        rep.symmetry_residual = worst;
        if (worst > tol)
            throw AsymmetricBarrier("symmetry residual " + std::to_string(worst) + " exceeds tol " +
                                    std::to_string(tol));
    }
    rep.valid = true;
    rep.midpoint = spec.midpoint();
    rep.width = spec.width();
    rep.message = "ok";
    return rep;
}

} // namespace ocs
