#include "report.hpp"

#include "blendfuse/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace blendfuse::cli {

using nlohmann::json;

namespace {

std::string num(double x) { return io::format_fixed(x, 2); }

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// White to dark blue.
std::string color(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(0xf7, 0x08), mix(0xfb, 0x30), mix(0xff, 0x6b));
    return buf;
}

std::string header(double w, double h)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start")
{
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) +
           "</text>\n";
}

} // namespace

std::string surface_svg(const ThresholdSurface& s, const std::string& title)
{
    const double cell = 8.0;
    const double left = 60.0, top = 40.0;
    const auto rows = static_cast<double>(s.alpha_grid.size());
    const auto cols = static_cast<double>(s.beta_grid.size());
    const double width = left + cols * cell + 90.0;
    const double height = top + rows * cell + 50.0;
    const double lo = s.score.minCoeff();
    const double hi = s.score.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;

    std::string out = header(width, height);
    out += text(left, 20, title);
    for (Eigen::Index i = 0; i < s.score.rows(); ++i)
        for (Eigen::Index j = 0; j < s.score.cols(); ++j)
            out += "<rect x=\"" + num(left + static_cast<double>(j) * cell) + "\" y=\"" +
                   num(top + static_cast<double>(i) * cell) + "\" width=\"" + num(cell) + "\" height=\"" +
                   num(cell) + "\" fill=\"" + color((s.score(i, j) - lo) / span) + "\"/>\n";
    out += "<rect x=\"" + num(left + static_cast<double>(s.best_j) * cell) + "\" y=\"" +
           num(top + static_cast<double>(s.best_i) * cell) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
           "\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";

    // axis labels at the grid ends
    out += text(left - 4, top + cell, io::format_fixed(s.alpha_grid.front(), 2), "end");
    out += text(left - 4, top + rows * cell, io::format_fixed(s.alpha_grid.back(), 2), "end");
    out += text(left, top + rows * cell + 14, io::format_fixed(s.beta_grid.front(), 2), "middle");
    out += text(left + cols * cell, top + rows * cell + 14, io::format_fixed(s.beta_grid.back(), 2), "middle");
    out += text(left + cols * cell / 2, top + rows * cell + 32, "beta (salience)", "middle");
    out += text(12, top + rows * cell / 2, "alpha", "start");

    // legend
    const double lx = left + cols * cell + 20;
    for (int k = 0; k < 10; ++k)
        out += "<rect x=\"" + num(lx) + "\" y=\"" + num(top + (9 - k) * 12.0) + "\" width=\"14\" height=\"12\" fill=\"" +
               color((k + 0.5) / 10.0) + "\"/>\n";
    out += text(lx + 18, top + 10, io::format_fixed(hi, 3));
    out += text(lx + 18, top + 120, io::format_fixed(lo, 3));
    out += text(lx, top + 140, "best " + io::format_fixed(s.best.alpha, 2) + "/" + io::format_fixed(s.best.beta, 2));
    out += "</svg>\n";
    return out;
}

ThresholdSurface mean_surface(std::span<const ThresholdSurface> per_fold)
{
    if (per_fold.empty())
        throw ValidationError("mean_surface: no fold surfaces");
    ThresholdSurface m = per_fold.front();
    for (std::size_t f = 1; f < per_fold.size(); ++f) {
        if (per_fold[f].alpha_grid != m.alpha_grid || per_fold[f].beta_grid != m.beta_grid)
            throw ValidationError("mean_surface: fold surfaces use different grids");
        m.score += per_fold[f].score;
        m.acc_p += per_fold[f].acc_p;
        m.acc_s += per_fold[f].acc_s;
        m.n += per_fold[f].n;
    }
    const auto k = static_cast<double>(per_fold.size());
    m.score /= k;
    m.acc_p /= k;
    m.acc_s /= k;
    // argmax with the same tie rule as the per-fold search: row-major scan,
    // first strict maximum wins.
    m.best_i = m.best_j = 0;
    for (Eigen::Index i = 0; i < m.score.rows(); ++i)
        for (Eigen::Index j = 0; j < m.score.cols(); ++j)
            if (m.score(i, j) > m.score(m.best_i, m.best_j)) {
                m.best_i = i;
                m.best_j = j;
            }
    m.best = {m.alpha_grid[static_cast<std::size_t>(m.best_i)], m.beta_grid[static_cast<std::size_t>(m.best_j)]};
    m.best_result = m.at(m.best_i, m.best_j);
    return m;
}

std::string beta_bars_svg(std::span<const ThresholdSurface> per_fold, const std::string& title)
{
    const double bar = 40.0, gap = 20.0, left = 50.0, top = 40.0, plot_h = 200.0;
    const double width = left + static_cast<double>(per_fold.size()) * (bar + gap) + gap;
    const double height = top + plot_h + 40.0;
    double ymax = 0.0;
    for (const auto& s : per_fold)
        ymax = std::max(ymax, s.beta_grid.back());
    if (ymax <= 0.0)
        ymax = 1.0;

    std::string out = header(width, height);
    out += text(left, 20, title);
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(width - 5) + "\" y2=\"" +
           num(top + plot_h) + "\" stroke=\"black\"/>\n";
    out += text(left - 4, top + 4, io::format_fixed(ymax, 2), "end");
    out += text(left - 4, top + plot_h, "0", "end");
    for (std::size_t f = 0; f < per_fold.size(); ++f) {
        const double b = per_fold[f].best.beta;
        const double h = plot_h * b / ymax;
        const double x = left + gap + static_cast<double>(f) * (bar + gap);
        out += "<rect x=\"" + num(x) + "\" y=\"" + num(top + plot_h - h) + "\" width=\"" + num(bar) + "\" height=\"" +
               num(h) + "\" fill=\"#2171b5\"/>\n";
        out += text(x + bar / 2, top + plot_h - h - 4, io::format_fixed(b, 2), "middle");
        out += text(x + bar / 2, top + plot_h + 14, "fold " + std::to_string(f), "middle");
    }
    out += "</svg>\n";
    return out;
}

json threshold_report(std::span<const ThresholdSurface> per_fold, ThresholdStrategy strategy,
                      ThresholdPair selected)
{
    json j;
    j["alpha"] = selected.alpha;
    j["beta"] = selected.beta;
    j["strategy"] = std::string(strategy_name(strategy));
    json folds = json::array();
    for (std::size_t f = 0; f < per_fold.size(); ++f) {
        const auto& s = per_fold[f];
        folds.push_back({{"fold", f},
                         {"alpha", s.best.alpha},
                         {"beta", s.best.beta},
                         {"score", s.best_result.score},
                         {"acc_p", s.best_result.acc_p},
                         {"acc_s", s.best_result.acc_s},
                         {"n", s.n}});
    }
    j["per_fold"] = folds;
    const BetaSpread b = beta_spread(per_fold);
    j["beta_spread"] = {{"min", b.min}, {"max", b.max}, {"ratio", b.ratio ? json(*b.ratio) : json(nullptr)}};
    double amin = per_fold.front().best.alpha, amax = amin;
    for (const auto& s : per_fold) {
        amin = std::min(amin, s.best.alpha);
        amax = std::max(amax, s.best.alpha);
    }
    j["alpha_spread"] = {{"min", amin}, {"max", amax}};
    return j;
}

json results_json(const CrossValidationResult& cv)
{
    json j;
    json folds = json::array();
    for (const auto& f : cv.folds) {
        json w;
        for (const auto& [name, v] : f.weights.weights())
            w[name] = v;
        folds.push_back({{"fold", f.fold},
                         {"acc_p", f.result.acc_p},
                         {"acc_s", f.result.acc_s},
                         {"score", f.result.score},
                         {"n", f.result.n},
                         {"alpha", f.thresholds.alpha},
                         {"beta", f.thresholds.beta},
                         {"weights", w}});
    }
    j["folds"] = folds;
    j["summary"] = {{"acc_p", {{"mean", cv.acc_p.mean}, {"std", cv.acc_p.std}}},
                    {"acc_s", {{"mean", cv.acc_s.mean}, {"std", cv.acc_s.std}}},
                    {"score", {{"mean", cv.score.mean}, {"std", cv.score.std}}}};
    j["pooled"] = {{"acc_p", cv.pooled.acc_p},
                   {"acc_s", cv.pooled.acc_s},
                   {"score", cv.pooled.score},
                   {"n", cv.pooled.n}};
    return j;
}

bool score_identity_holds(double acc_p, double acc_s, double score, double tol)
{
    return std::abs(combined_score(acc_p, acc_s) - score) <= tol + 1e-9;
}

} // namespace blendfuse::cli
