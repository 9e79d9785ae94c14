#include "tonesr/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "tonesr/cc.hpp"
#include "tonesr/common.hpp"
#include "tonesr/dataset.hpp"
#include "tonesr/synth.hpp"

namespace tonesr::analysis {

namespace {

constexpr double kPeakThreshold = 0.3;   // normalized prominence floor
constexpr double kOriginExclusion = 2.5; // skip the zero-lag blob

std::vector<uint8_t> binarize(const Raster& r) {
    std::vector<uint8_t> ink(r.size());
    for (size_t i = 0; i < r.size(); ++i) ink[i] = r.pixels[i] < 128;
    return ink;
}

// Unbiased linear autocorrelation of the mean-subtracted ink indicator,
// evaluated on the padded grid. Access via wrapped lag coordinates.
struct AutoCorr {
    int w = 0, h = 0;    // source dims
    int pw = 0, ph = 0;  // padded dims (2w, 2h)
    std::vector<double> c;
    double c0 = 0;  // zero-lag raw value

    double raw(int dx, int dy) const {
        const int ix = ((dx % pw) + pw) % pw;
        const int iy = ((dy % ph) + ph) % ph;
        return c[static_cast<size_t>(iy) * pw + ix];
    }
    // biased estimate: zero-pad decay left in, so ridges through the origin
    // fall off monotonically with |lag| and cannot spawn spurious maxima
    double biased(int dx, int dy) const { return c0 > 0 ? raw(dx, dy) / c0 : 0.0; }
    double norm(int dx, int dy) const {
        const int ax = std::abs(dx), ay = std::abs(dy);
        if (ax >= w || ay >= h || c0 <= 0) return 0;
        const double overlap =
            static_cast<double>((w - ax)) * (h - ay) / (static_cast<double>(w) * h);
        return raw(dx, dy) / (c0 * overlap);
    }
};

std::mutex g_fftw_mutex;  // FFTW planning is not thread-safe

AutoCorr autocorrelate(const Raster& region) {
    AutoCorr ac;
    ac.w = region.width;
    ac.h = region.height;
    ac.pw = 2 * ac.w;
    ac.ph = 2 * ac.h;

    const size_t n = static_cast<size_t>(ac.pw) * ac.ph;
    std::vector<double> in(n, 0.0);
    double mean = 0.0;
    for (size_t i = 0; i < region.size(); ++i) mean += region.pixels[i] < 128 ? 1.0 : 0.0;
    mean /= static_cast<double>(region.size());
    for (int y = 0; y < ac.h; ++y)
        for (int x = 0; x < ac.w; ++x)
            in[static_cast<size_t>(y) * ac.pw + x] =
                (region.at(x, y) < 128 ? 1.0 : 0.0) - mean;

    const int ch = ac.ph, cw = ac.pw / 2 + 1;
    std::vector<fftw_complex> spec(static_cast<size_t>(ch) * cw);
    ac.c.assign(n, 0.0);

    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_plan fwd = fftw_plan_dft_r2c_2d(ac.ph, ac.pw, in.data(), spec.data(), FFTW_ESTIMATE);
        fftw_execute(fwd);
        fftw_destroy_plan(fwd);
        for (auto& z : spec) {
            z[0] = z[0] * z[0] + z[1] * z[1];
            z[1] = 0.0;
        }
        fftw_plan bwd = fftw_plan_dft_c2r_2d(ac.ph, ac.pw, spec.data(), ac.c.data(), FFTW_ESTIMATE);
        fftw_execute(bwd);
        fftw_destroy_plan(bwd);
    }
    const double scale = 1.0 / n;
    for (auto& v : ac.c) v *= scale;
    ac.c0 = ac.raw(0, 0);
    return ac;
}

struct Peak {
    double x = 0, y = 0;  // subpixel lag
    double value = 0;
    double radius() const { return std::hypot(x, y); }
    double angle() const {  // folded into [0, 180)
        double a = std::atan2(y, x) * 180.0 / M_PI;
        if (a < 0) a += 180.0;
        if (a >= 180.0) a -= 180.0;
        return a;
    }
};

double subpix(double cm, double c0, double cp) {
    const double den = cm - 2.0 * c0 + cp;
    if (std::abs(den) < 1e-12) return 0.0;
    double d = 0.5 * (cm - cp) / den;
    return std::clamp(d, -0.5, 0.5);
}

std::vector<Peak> find_peaks(const AutoCorr& ac, int maxlag) {
    std::vector<Peak> peaks;
    for (int dy = 0; dy <= maxlag; ++dy) {
        for (int dx = -maxlag; dx <= maxlag; ++dx) {
            if (dy == 0 && dx <= 0) continue;  // half-plane, symmetry
            const double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            if (r2 < kOriginExclusion * kOriginExclusion) continue;
            const double v = ac.norm(dx, dy);
            if (v < kPeakThreshold) continue;
            // strict maximum of the biased estimate: along a stripe ridge the
            // decay makes only the point nearest the origin survive
            const double vb = ac.biased(dx, dy);
            bool is_max = true;
            for (int ny = -1; ny <= 1 && is_max; ++ny)
                for (int nx = -1; nx <= 1; ++nx) {
                    if (!nx && !ny) continue;
                    const double nb = ac.biased(dx + nx, dy + ny);
                    const bool closer = (static_cast<double>(dx + nx) * (dx + nx) +
                                         static_cast<double>(dy + ny) * (dy + ny)) <
                                        (static_cast<double>(dx) * dx +
                                         static_cast<double>(dy) * dy);
                    if (nb > vb || (closer && nb >= vb)) {
                        is_max = false;
                        break;
                    }
                }
            if (!is_max) continue;
            Peak p;
            p.x = dx + subpix(ac.norm(dx - 1, dy), v, ac.norm(dx + 1, dy));
            p.y = dy + subpix(ac.norm(dx, dy - 1), v, ac.norm(dx, dy + 1));
            p.value = v;
            peaks.push_back(p);
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        const double ra = a.radius(), rb = b.radius();
        if (std::abs(ra - rb) > 0.3) return ra < rb;
        return a.angle() < b.angle();  // ties by smaller angle
    });
    return peaks;
}

// Improve pitch/angle by walking outward along v's harmonics, re-estimating
// the base vector after each step so the prediction window stays tight.
Peak refine_with_harmonic(const AutoCorr& ac, const Peak& v, int maxlag) {
    Peak cur = v;
    if (cur.radius() < 1e-6) return cur;
    int k = 2;
    while (k * cur.radius() <= maxlag) {
        const double ex = cur.x * k, ey = cur.y * k;
        const int win = 2;
        double best = -1e30;
        int bx = 0, by = 0;
        for (int dy = static_cast<int>(std::lround(ey)) - win;
             dy <= static_cast<int>(std::lround(ey)) + win; ++dy)
            for (int dx = static_cast<int>(std::lround(ex)) - win;
                 dx <= static_cast<int>(std::lround(ex)) + win; ++dx) {
                const double val = ac.norm(dx, dy);
                if (val > best) {
                    best = val;
                    bx = dx;
                    by = dy;
                }
            }
        if (best < 0.25) break;
        Peak h;
        h.x = (bx + subpix(ac.norm(bx - 1, by), best, ac.norm(bx + 1, by))) / k;
        h.y = (by + subpix(ac.norm(bx, by - 1), best, ac.norm(bx, by + 1))) / k;
        h.value = cur.value;
        cur = h;
        k *= 2;
    }
    return cur;
}

}  // namespace

LatticePeaks detect_lattice(const Raster& region) {
    LatticePeaks out;
    const AutoCorr ac = autocorrelate(region);
    if (ac.c0 <= 1e-9) return out;  // constant region
    const int maxlag = std::max(4, std::min(region.width, region.height) / 2 - 2);
    auto peaks = find_peaks(ac, maxlag);
    if (peaks.empty()) return out;

    Peak v1 = refine_with_harmonic(ac, peaks.front(), maxlag);
    out.has_v1 = true;
    out.v1x = v1.x;
    out.v1y = v1.y;
    out.prom1 = peaks.front().value;

    const double a1 = std::atan2(v1.y, v1.x);
    for (size_t i = 1; i < peaks.size(); ++i) {
        const double a2 = std::atan2(peaks[i].y, peaks[i].x);
        const double s = std::abs(std::sin(a2 - a1));
        if (s < std::sin(20.0 * M_PI / 180.0)) continue;  // collinear with v1
        Peak v2 = refine_with_harmonic(ac, peaks[i], maxlag);
        out.has_v2 = true;
        out.v2x = v2.x;
        out.v2y = v2.y;
        out.prom2 = peaks[i].value;
        break;
    }
    return out;
}

namespace {

// interior ink component areas (components touching the border are dropped)
std::vector<double> interior_component_areas(const Raster& region) {
    auto ink = binarize(region);
    ComponentMap cm = label_components(ink, region.width, region.height, 8);
    std::vector<double> areas;
    for (const auto& c : cm.components) {
        if (c.x0 == 0 || c.y0 == 0 || c.x1 == region.width - 1 || c.y1 == region.height - 1)
            continue;
        areas.push_back(c.pixel_count);
    }
    return areas;
}

double ink_fraction(const Raster& region) {
    size_t ink = 0;
    for (auto p : region.pixels) ink += p < 128;
    return static_cast<double>(ink) / static_cast<double>(region.size());
}

double fold90(double deg) {
    double a = std::fmod(deg, 90.0);
    if (a < 0) a += 90.0;
    return a;
}

struct RunStats {
    double mean_ink = 0, mean_paper = 0;
    int ink_runs = 0, paper_runs = 0;
};

// Mean ink/paper run lengths sampled along direction (nx, ny) across the
// region; first/last runs of every line are dropped as border-truncated.
// Lines whose ink fraction exceeds skip_above are ignored (used for grids).
RunStats run_lengths(const Raster& region, const std::vector<uint8_t>& ink, double nx, double ny,
                     double skip_above) {
    const double step = 0.5;
    const double dxp = -ny, dyp = nx;  // stripe direction (perpendicular to travel)
    const double cx = region.width * 0.5, cy = region.height * 0.5;
    const double diag = std::hypot(region.width, region.height);
    RunStats rs;
    double ink_total = 0, paper_total = 0;

    // bilinear sampling keeps boundary staircase wobble out of the runs
    auto sample = [&](double x, double y, uint8_t* out) {
        x -= 0.5;
        y -= 0.5;
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        if (x0 < 0 || y0 < 0 || x0 + 1 >= region.width || y0 + 1 >= region.height) return false;
        const double fx = x - x0, fy = y - y0;
        auto at = [&](int xx, int yy) {
            return static_cast<double>(ink[static_cast<size_t>(yy) * region.width + xx]);
        };
        const double v = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
                         (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
        *out = v >= 0.5 ? 1 : 0;
        return true;
    };

    for (double off = -diag / 2; off <= diag / 2; off += 0.7) {
        const double ox = cx + off * dxp, oy = cy + off * dyp;
        // collect the contiguous in-bounds sample sequence
        std::vector<uint8_t> seq;
        seq.reserve(static_cast<size_t>(diag / step) + 2);
        for (double t = -diag / 2; t <= diag / 2; t += step) {
            uint8_t value = 0;
            if (!sample(ox + t * nx, oy + t * ny, &value)) {
                if (!seq.empty()) break;  // left the region; stop the line
                continue;                 // still before entry
            }
            seq.push_back(value);
        }
        if (seq.size() < 8) continue;
        size_t line_ink = 0;
        for (auto v : seq) line_ink += v;
        if (static_cast<double>(line_ink) / seq.size() > skip_above) continue;

        // runs, dropping the truncated first and last
        std::vector<std::pair<uint8_t, int>> runs;
        for (size_t i = 0; i < seq.size(); ++i) {
            if (runs.empty() || runs.back().first != seq[i]) runs.push_back({seq[i], 1});
            else runs.back().second++;
        }
        for (size_t i = 1; i + 1 < runs.size(); ++i) {
            const double len = runs[i].second * step;
            if (runs[i].first) {
                ink_total += len;
                rs.ink_runs++;
            } else {
                paper_total += len;
                rs.paper_runs++;
            }
        }
    }
    if (rs.ink_runs) rs.mean_ink = ink_total / rs.ink_runs;
    if (rs.paper_runs) rs.mean_paper = paper_total / rs.paper_runs;
    return rs;
}

}  // namespace

DensityReport measure_dots(const Raster& region) {
    DensityReport rep;
    rep.kind = ToneKind::dot;
    rep.roi = {0, 0, region.width, region.height};
    const double f = ink_fraction(region);
    if (f < 1e-4 || f > 1.0 - 1e-4) return rep;  // uniform region, confidence 0

    const LatticePeaks lat = detect_lattice(region);
    if (!lat.has_v1) return rep;
    double pitch = std::hypot(lat.v1x, lat.v1y);
    double angle = fold90(std::atan2(lat.v1y, lat.v1x) * 180.0 / M_PI);
    if (lat.has_v2) {
        const double p2 = std::hypot(lat.v2x, lat.v2y);
        if (std::abs(p2 - pitch) < 0.25 * pitch) {
            pitch = 0.5 * (pitch + p2);
            const double a2 = fold90(std::atan2(lat.v2y, lat.v2x) * 180.0 / M_PI);
            // average the two folded estimates, respecting wraparound at 90
            double d = a2 - angle;
            if (d > 45) d -= 90;
            if (d < -45) d += 90;
            angle = fold90(angle + d / 2);
        }
    }

    const auto areas = interior_component_areas(region);
    double size;
    if (areas.size() >= 3) {
        double mean = 0;
        for (double a : areas) mean += a;
        mean /= static_cast<double>(areas.size());
        size = 2.0 * std::sqrt(mean / M_PI);
    } else {
        size = 2.0 * pitch * std::sqrt(f / M_PI);  // coverage fallback
    }
    rep.size_px = size;
    rep.gap_px = pitch - size;
    rep.angle_deg = angle;
    rep.unit_area_px2 = pitch * pitch;
    rep.confidence = std::min(1.0, lat.prom1);
    return rep;
}


// ---- projected-profile stripe measurement ----

struct Profile {
    std::vector<double> mean;   // per-bin ink fraction along the normal
    std::vector<int> count;
    double bin = 0.25;
};

Profile build_profile(const std::vector<uint8_t>& ink, int w, int h, double theta_normal) {
    Profile pr;
    const double nx = std::cos(theta_normal * M_PI / 180.0);
    const double ny = std::sin(theta_normal * M_PI / 180.0);
    const double diag = std::hypot(w, h);
    const int nbins = static_cast<int>(diag / pr.bin) + 2;
    std::vector<double> acc(nbins, 0.0);
    std::vector<int> cnt(nbins, 0);
    const double u0 = -0.5 * 0.0;  // offsets measured from pixel (0.5, 0.5)
    (void)u0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) * nx + (y + 0.5) * ny + diag / 2;
            const int b = static_cast<int>(u / pr.bin);
            if (b < 0 || b >= nbins) continue;
            acc[b] += ink[static_cast<size_t>(y) * w + x];
            cnt[b]++;
        }
    }
    int max_cnt = 0;
    for (int c : cnt) max_cnt = std::max(max_cnt, c);
    // keep a uniform axis: trim the clipped corner ends, then fill interior
    // bins that the angle left empty (axis-aligned and 45-degree projections)
    int lo = 0, hi = nbins - 1;
    while (lo < nbins && cnt[lo] * 3 < max_cnt) ++lo;
    while (hi >= 0 && cnt[hi] * 3 < max_cnt) --hi;
    if (hi <= lo) return pr;
    pr.mean.assign(hi - lo + 1, 0.0);
    pr.count.assign(hi - lo + 1, 0);
    int last_filled = -1;
    for (int b = lo; b <= hi; ++b) {
        const int i = b - lo;
        if (cnt[b] > 0) {
            pr.mean[i] = acc[b] / cnt[b];
            pr.count[i] = cnt[b];
            if (last_filled < i - 1 && last_filled >= 0) {
                for (int k = last_filled + 1; k < i; ++k) {
                    const double t =
                        static_cast<double>(k - last_filled) / (i - last_filled);
                    pr.mean[k] = (1 - t) * pr.mean[last_filled] + t * pr.mean[i];
                }
            }
            last_filled = i;
        }
    }
    return pr;
}

double profile_variance(const Profile& pr) {
    if (pr.mean.size() < 8) return 0.0;
    double m = 0;
    for (double v : pr.mean) m += v;
    m /= static_cast<double>(pr.mean.size());
    double var = 0;
    for (double v : pr.mean) var += (v - m) * (v - m);
    return var / static_cast<double>(pr.mean.size());
}

double direction_variance(const std::vector<uint8_t>& ink, int w, int h, double theta) {
    // 1 px box smoothing first: aliasing combs from the pixel grid die while
    // true stripe waves survive
    Profile pr = build_profile(ink, w, h, theta);
    const int n = static_cast<int>(pr.mean.size());
    if (n < 8) return 0.0;
    Profile sm = pr;
    for (int i = 0; i < n; ++i) {
        double a = 0;
        int c = 0;
        for (int k = -2; k <= 2; ++k) {
            const int j = i + k;
            if (j < 0 || j >= n) continue;
            a += pr.mean[j];
            ++c;
        }
        sm.mean[i] = a / c;
    }
    return profile_variance(sm);
}

// argmax of projection variance over [0,180), parabolic-refined
double find_normal_angle(const std::vector<uint8_t>& ink, int w, int h, double* out_var) {
    double best = -1, best_theta = 0;
    for (int t = 0; t < 180; ++t) {
        const double v = direction_variance(ink, w, h, t);
        if (v > best) {
            best = v;
            best_theta = t;
        }
    }
    // parabolic refinement at 0.25 degree resolution
    double lo = best_theta - 1, hi = best_theta + 1;
    for (int pass = 0; pass < 3; ++pass) {
        const double step = (hi - lo) / 8;
        double b = -1, bt = best_theta;
        for (double t = lo; t <= hi + 1e-9; t += step) {
            const double v = direction_variance(ink, w, h, t);
            if (v > b) {
                b = v;
                bt = t;
            }
        }
        best_theta = bt;
        best = b;
        lo = bt - 2 * step;
        hi = bt + 2 * step;
    }
    if (out_var) *out_var = best;
    return std::fmod(best_theta + 360.0, 180.0);
}

struct FamilyMeasure {
    bool ok = false;
    double pitch = 0, width = 0, gap = 0;
    double angle_normal = 0;  // degrees
    double strength = 0;      // 1D autocorr peak value
};

// pitch from the profile's 1D autocorrelation (harmonic-walk refined), duty
// from threshold run lengths over the profile
FamilyMeasure measure_family(const std::vector<uint8_t>& ink, int w, int h,
                             double theta_normal) {
    FamilyMeasure fm;
    fm.angle_normal = theta_normal;
    const Profile pr = build_profile(ink, w, h, theta_normal);
    const int n = static_cast<int>(pr.mean.size());
    if (n < 24) return fm;
    double mean = 0;
    for (double v : pr.mean) mean += v;
    mean /= n;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = pr.mean[i] - mean;

    auto corr = [&](int lag) {
        double num = 0, den0 = 0, den1 = 0;
        for (int i = 0; i + lag < n; ++i) {
            num += x[i] * x[i + lag];
            den0 += x[i] * x[i];
            den1 += x[i + lag] * x[i + lag];
        }
        const double den = std::sqrt(den0 * den1);
        return den > 1e-12 ? num / den : 0.0;
    };

    const int min_lag = static_cast<int>(2.0 / pr.bin);  // periods below 2 px unsupported
    const int max_lag = n / 2;
    // base peak: the smallest local max comparable to the global one, so
    // sampling-comb harmonics below the true pitch are skipped
    double vmax = 0;
    for (int lag = min_lag; lag < max_lag; ++lag) vmax = std::max(vmax, corr(lag));
    if (vmax < 0.3) return fm;
    const double floor_v = std::max(0.3, 0.7 * vmax);
    int peak = 0;
    double peak_v = 0;
    for (int lag = min_lag; lag < max_lag; ++lag) {
        const double v = corr(lag);
        if (v >= floor_v && v > corr(lag - 1) && v >= corr(lag + 1)) {
            peak = lag;
            peak_v = v;
            break;
        }
    }
    if (!peak) return fm;
    // subpixel + harmonic walk
    auto subpix1 = [&](int l) {
        const double cm = corr(l - 1), c0 = corr(l), cp = corr(l + 1);
        const double den = cm - 2 * c0 + cp;
        return std::abs(den) > 1e-12 ? std::clamp(0.5 * (cm - cp) / den, -0.5, 0.5) : 0.0;
    };
    double pitch_bins = peak + subpix1(peak);
    int k = 2;
    while (k * pitch_bins < max_lag) {
        const int guess = static_cast<int>(std::lround(k * pitch_bins));
        int best_l = 0;
        double best_v = 0;
        for (int l = guess - 2; l <= guess + 2; ++l) {
            if (l <= min_lag || l >= max_lag) continue;
            const double v = corr(l);
            if (v > best_v) {
                best_v = v;
                best_l = l;
            }
        }
        if (!best_l || best_v < 0.25) break;
        pitch_bins = (best_l + subpix1(best_l)) / k;
        k *= 2;
    }
    fm.pitch = pitch_bins * pr.bin;
    fm.strength = peak_v;

    auto smooth_by = [&](int kernel) {
        std::vector<double> sm(n);
        for (int i = 0; i < n; ++i) {
            double a = 0;
            int c = 0;
            for (int k = -kernel / 2; k <= kernel / 2; ++k) {
                const int j = i + k;
                if (j < 0 || j >= n) continue;
                a += pr.mean[j];
                ++c;
            }
            sm[i] = a / c;
        }
        return sm;
    };
    auto percentiles = [&](const std::vector<double>& v, double* lo, double* hi) {
        std::vector<double> tmp = v;
        std::sort(tmp.begin(), tmp.end());
        *lo = tmp[static_cast<size_t>(0.05 * (tmp.size() - 1))];
        *hi = tmp[static_cast<size_t>(0.95 * (tmp.size() - 1))];
    };

    // first pass: area duty against the plateau levels of a lightly smoothed
    // profile; robust even when one of band/gap is narrow
    const std::vector<double> sm1 = smooth_by(4);
    double lo1, hi1;
    percentiles(sm1, &lo1, &hi1);
    if (hi1 - lo1 < 1e-3) return fm;
    double mean1 = 0;
    for (double v : sm1) mean1 += v;
    mean1 /= n;
    const double duty_area = std::clamp((mean1 - lo1) / (hi1 - lo1), 0.05, 0.95);

    // second pass: threshold runs with a kernel that fits inside both the
    // band and the gap, so half-prominence crossings sit on the edges
    const double narrow = std::min(duty_area, 1.0 - duty_area) * pitch_bins;
    const int kernel2 =
        std::max(2, static_cast<int>(std::lround(std::min(narrow * 0.6, pitch_bins / 4))));
    const std::vector<double> sm = smooth_by(kernel2);
    double lo2, hi2;
    percentiles(sm, &lo2, &hi2);
    const double thr = 0.5 * (lo2 + hi2);
    std::vector<std::pair<bool, int>> runs;
    for (int i = 0; i < n; ++i) {
        const bool is_ink = sm[i] >= thr;
        if (runs.empty() || runs.back().first != is_ink)
            runs.push_back({is_ink, 1});
        else
            runs.back().second++;
    }
    double ink_total = 0, paper_total = 0;
    int ink_runs = 0, paper_runs = 0;
    for (size_t i = 1; i + 1 < runs.size(); ++i) {
        if (runs[i].first) {
            ink_total += runs[i].second;
            ink_runs++;
        } else {
            paper_total += runs[i].second;
            paper_runs++;
        }
    }
    if (ink_runs < 2 || paper_runs < 2) return fm;
    const double mean_ink = ink_total / ink_runs, mean_paper = paper_total / paper_runs;
    double duty = mean_ink / (mean_ink + mean_paper);
    if (std::abs(duty - duty_area) > 0.15) duty = duty_area;  // runs hit noise
    fm.width = fm.pitch * duty;
    fm.gap = fm.pitch - fm.width;
    fm.ok = true;
    return fm;
}

DensityReport measure_stripes(const Raster& region) {
    DensityReport rep;
    rep.kind = ToneKind::stripe;
    rep.roi = {0, 0, region.width, region.height};
    const double f = ink_fraction(region);
    if (f < 1e-4 || f > 1.0 - 1e-4) return rep;
    const auto ink = binarize(region);

    double var1 = 0;
    const double theta1 = find_normal_angle(ink, region.width, region.height, &var1);
    if (var1 < 1e-4) return rep;
    FamilyMeasure f1 = measure_family(ink, region.width, region.height, theta1);
    if (!f1.ok) return rep;

    // grid = a second family on the orthogonal normal
    const double theta2 = std::fmod(theta1 + 90.0, 180.0);
    const double var2 = direction_variance(ink, region.width, region.height, theta2);
    FamilyMeasure f2;
    if (var2 > 0.2 * var1) f2 = measure_family(ink, region.width, region.height, theta2);
    const bool grid = f2.ok && std::abs(f2.pitch - f1.pitch) < 0.5 * f1.pitch;
    rep.kind = grid ? ToneKind::grid : ToneKind::stripe;

    auto stripe_angle = [](double normal) { return std::fmod(normal + 90.0, 180.0); };
    if (grid) {
        rep.size_px = 0.5 * (f1.width + f2.width);
        rep.gap_px = 0.5 * (f1.gap + f2.gap);
        const double a1 = fold90(stripe_angle(f1.angle_normal));
        const double a2 = fold90(stripe_angle(f2.angle_normal));
        double d = a2 - a1;
        if (d > 45) d -= 90;
        if (d < -45) d += 90;
        rep.angle_deg = fold90(a1 + d / 2);
        rep.unit_area_px2 = f1.pitch * f2.pitch;
        rep.confidence = std::min(1.0, std::min(f1.strength, f2.strength));
    } else {
        rep.size_px = f1.width;
        rep.gap_px = f1.gap;
        rep.angle_deg = stripe_angle(f1.angle_normal);
        rep.confidence = std::min(1.0, f1.strength);
    }
    return rep;
}

DensityReport measure_unit_area(const Raster& region, const Bbox* roi) {
    DensityReport rep;
    rep.kind = ToneKind::tile;
    rep.roi = {0, 0, region.width, region.height};
    if (roi) {
        rep.roi = *roi;
        Raster sub(roi->w, roi->h);
        for (int y = 0; y < roi->h; ++y)
            for (int x = 0; x < roi->w; ++x)
                sub.at(x, y) = region.at(std::clamp(roi->x + x, 0, region.width - 1),
                                         std::clamp(roi->y + y, 0, region.height - 1));
        const auto areas = interior_component_areas(sub);
        if (areas.empty()) return rep;
        double mean = 0;
        for (double a : areas) mean += a;
        rep.unit_area_px2 = mean / static_cast<double>(areas.size());
        rep.confidence = 1.0;
        return rep;
    }
    const LatticePeaks lat = detect_lattice(region);
    if (!lat.has_v1 || !lat.has_v2) return rep;  // aperiodic or 1D pattern
    rep.unit_area_px2 = std::abs(lat.v1x * lat.v2y - lat.v1y * lat.v2x);
    rep.confidence = std::min(1.0, std::min(lat.prom1, lat.prom2));
    return rep;
}

ToneKind detect_kind(const Raster& region) {
    const auto ink = binarize(region);
    ComponentMap cm = label_components(ink, region.width, region.height, 8);
    size_t total_ink = 0;
    for (auto v : ink) total_ink += v;
    if (!total_ink) return ToneKind::dot;
    int largest = 0;
    for (const auto& c : cm.components) largest = std::max(largest, c.pixel_count);
    const double largest_frac = static_cast<double>(largest) / total_ink;
    if (largest_frac > 0.5) {
        // one fused net: grid when the orthogonal family answers too
        double var1 = 0;
        const double theta1 = find_normal_angle(ink, region.width, region.height, &var1);
        const double var2 =
            direction_variance(ink, region.width, region.height, std::fmod(theta1 + 90.0, 180.0));
        return (var2 > 0.2 * var1) ? ToneKind::grid : ToneKind::stripe;
    }

    // separate pieces: elongated -> stripe, disk-like -> dot, else tile
    double aspect_acc = 0, circ_acc = 0;
    int counted = 0;
    for (const auto& c : cm.components) {
        if (c.x0 == 0 || c.y0 == 0 || c.x1 == region.width - 1 || c.y1 == region.height - 1)
            continue;
        const int bw = c.x1 - c.x0 + 1, bh = c.y1 - c.y0 + 1;
        aspect_acc += static_cast<double>(std::max(bw, bh)) / std::max(1, std::min(bw, bh));
        // perimeter = exposed 4-neighbor edges of the component
        int perim = 0;
        for (int y = c.y0; y <= c.y1; ++y) {
            for (int x = c.x0; x <= c.x1; ++x) {
                if (cm.label[static_cast<size_t>(y) * region.width + x] != c.id) continue;
                const int nx[] = {x + 1, x - 1, x, x};
                const int ny[] = {y, y, y + 1, y - 1};
                for (int d = 0; d < 4; ++d) {
                    if (nx[d] < 0 || ny[d] < 0 || nx[d] >= region.width ||
                        ny[d] >= region.height ||
                        cm.label[static_cast<size_t>(ny[d]) * region.width + nx[d]] != c.id)
                        ++perim;
                }
            }
        }
        circ_acc += 4.0 * M_PI * c.pixel_count / (static_cast<double>(perim) * perim);
        ++counted;
    }
    if (!counted) return ToneKind::stripe;  // everything touches the border
    const double aspect = aspect_acc / counted;
    const double circ = circ_acc / counted;
    if (aspect > 1.8) return ToneKind::stripe;
    return (circ >= 0.55) ? ToneKind::dot : ToneKind::tile;
}

DensityReport measure_kind(const Raster& region, ToneKind kind) {
    switch (kind) {
        case ToneKind::dot: return measure_dots(region);
        case ToneKind::stripe:
        case ToneKind::grid: return measure_stripes(region);
        case ToneKind::tile: return measure_unit_area(region);
    }
    return {};
}

DensityReport measure_auto(const Raster& region) {
    return measure_kind(region, detect_kind(region));
}

// ---- LBP ----

std::array<double, 10> lbp_histogram(const Raster& region) {
    std::array<double, 10> hist{};
    if (region.width < 3 || region.height < 3)
        throw std::invalid_argument("lbp_histogram: region too small");
    // 8 samples on the unit circle, bilinear interpolation
    double sx[8], sy[8];
    for (int k = 0; k < 8; ++k) {
        sx[k] = std::cos(2.0 * M_PI * k / 8.0);
        sy[k] = -std::sin(2.0 * M_PI * k / 8.0);
    }
    auto sample = [&](double x, double y) {
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0, fy = y - y0;
        auto px = [&](int xx, int yy) -> double { return region.at(xx, yy); };
        return (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
               (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
    };
    size_t count = 0;
    for (int y = 1; y < region.height - 1; ++y) {
        for (int x = 1; x < region.width - 1; ++x) {
            const double c = region.at(x, y);
            uint32_t bits = 0;
            for (int k = 0; k < 8; ++k)
                if (sample(x + sx[k], y + sy[k]) >= c) bits |= (1u << k);
            // uniformity: number of 0/1 transitions around the ring
            int transitions = 0;
            for (int k = 0; k < 8; ++k)
                transitions += ((bits >> k) & 1u) != ((bits >> ((k + 1) % 8)) & 1u);
            const int code = (transitions <= 2) ? static_cast<int>(__builtin_popcount(bits)) : 9;
            hist[static_cast<size_t>(code)] += 1.0;
            ++count;
        }
    }
    for (auto& v : hist) v /= static_cast<double>(count);
    return hist;
}

double chi_square(const std::array<double, 10>& a, const std::array<double, 10>& b) {
    double d = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s > 1e-12) d += (a[i] - b[i]) * (a[i] - b[i]) / s;
    }
    return d;
}

std::pair<int, double> lbp_classify(const LbpModel& model, const Raster& region) {
    if (region.width < 32 || region.height < 32)
        throw std::invalid_argument("lbp_classify: region must be at least 32x32");
    const auto h = lbp_histogram(region);
    int best = -1;
    double best_d = 0;
    for (const auto& [id, ref] : model.histograms) {
        const double d = chi_square(h, ref);
        if (best < 0 || d < best_d) {
            best = id;
            best_d = d;
        }
    }
    if (best < 0) throw ConfigError("lbp_classify: model has no reference histograms");
    return {best, best_d};
}

LbpModel lbp_train(const ToneRegistry& registry, const LbpTrainOptions& opt) {
    LbpModel model;
    DatasetOptions jitter_opt;
    jitter_opt.jitter_size_rel = opt.jitter_size_rel;
    jitter_opt.jitter_gap_rel = opt.jitter_gap_rel;
    jitter_opt.jitter_angle_deg = opt.jitter_angle_deg;
    for (const auto& [id, base] : registry.classes) {
        std::array<double, 10> acc{};
        Rng rng = Rng::stream(opt.seed, "lbp", static_cast<uint64_t>(id));
        for (int k = 0; k < opt.windows_per_class; ++k) {
            ScreentoneSpec s = jitter_spec(base, jitter_opt, rng);
            Raster tile = synth::render_tile(s, opt.window, opt.window);
            const auto h = lbp_histogram(tile);
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += h[i];
        }
        for (auto& v : acc) v /= opt.windows_per_class;
        model.histograms[id] = acc;
    }
    return model;
}

void LbpModel::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["radius"] = radius;
    j["neighbors"] = neighbors;
    j["metric"] = "chi2";
    j["classes"] = nlohmann::ordered_json::object();
    for (const auto& [id, h] : histograms) j["classes"][std::to_string(id)] = h;
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write LBP model");
    out << j.dump(2) << "\n";
}

LbpModel LbpModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open LBP model");
    nlohmann::json j;
    in >> j;
    LbpModel m;
    m.radius = j.value("radius", 1);
    m.neighbors = j.value("neighbors", 8);
    for (const auto& [key, arr] : j.at("classes").items()) {
        std::array<double, 10> h{};
        for (size_t i = 0; i < h.size(); ++i) h[i] = arr[i].get<double>();
        m.histograms[std::stoi(key)] = h;
    }
    return m;
}

}  // namespace tonesr::analysis
