#include "levitate/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"

namespace levitate::dsp {

using constants::kPi;
using cplx = std::complex<double>;

namespace {

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

cplx section_response(const Biquad& q, cplx zinv) {
    return (q.b0 + q.b1 * zinv + q.b2 * zinv * zinv) / (1.0 + q.a1 * zinv + q.a2 * zinv * zinv);
}

}  // namespace

BandpassFilter::BandpassFilter(double sample_rate, double center, double bandwidth, int order)
    : sample_rate_(sample_rate), order_(order) {
    const double lo = center - 0.5 * bandwidth;
    const double hi = center + 0.5 * bandwidth;
    if (!(sample_rate > 0.0) || !(bandwidth > 0.0) || !(lo > 0.0) || !(hi < 0.5 * sample_rate))
        throw InvalidBand("band-pass requires 0 < center - bw/2 and center + bw/2 < fs/2");
    if (order < 1) throw InvalidBand("band-pass order >= 1");

    const double fs = sample_rate;
    const double w_lo = 2.0 * fs * std::tan(kPi * lo / fs);
    const double w_hi = 2.0 * fs * std::tan(kPi * hi / fs);
    const double w0 = std::sqrt(w_lo * w_hi);
    const double bw = w_hi - w_lo;

    // Each prototype pole p maps to the two roots of s^2 - p bw s + w0^2.
    std::vector<cplx> poles;
    for (int k = 1; k <= order; ++k) {
        const cplx p = std::polar(1.0, kPi * (2.0 * k + order - 1) / (2.0 * order));
        const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0 * w0);
        poles.push_back(bilinear(0.5 * (p * bw + disc), fs));
        poles.push_back(bilinear(0.5 * (p * bw - disc), fs));
    }

    // Conjugate pairs become sections; leftover real poles are paired up.
    // Every section carries one zero at z = 1 and one at z = -1.
    std::vector<double> reals;
    for (const cplx& z : poles) {
        if (std::abs(z.imag()) <= 1e-12 * std::abs(z)) {
            reals.push_back(z.real());
        } else if (z.imag() > 0.0) {
            sections_.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
        }
    }
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        sections_.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});

    // Normalize to unit gain at the digital image of w0.
    const double f_center = fs / kPi * std::atan(w0 / (2.0 * fs));
    const double gain = magnitude(f_center);
    const double per_section = std::pow(gain, -1.0 / static_cast<double>(sections_.size()));
    for (auto& q : sections_) {
        q.b0 *= per_section;
        q.b1 *= per_section;
        q.b2 *= per_section;
    }
}

double BandpassFilter::magnitude(double frequency) const {
    const cplx zinv = std::polar(1.0, -2.0 * kPi * frequency / sample_rate_);
    cplx h = 1.0;
    for (const auto& q : sections_) h *= section_response(q, zinv);
    return std::abs(h);
}

std::vector<double> BandpassFilter::apply(std::span<const double> signal) const {
    std::vector<double> y(signal.begin(), signal.end());
    for (const auto& q : sections_) {
        double s1 = 0.0, s2 = 0.0;  // transposed direct form II
        for (double& v : y) {
            const double x = v;
            const double out = q.b0 * x + s1;
            s1 = q.b1 * x - q.a1 * out + s2;
            s2 = q.b2 * x - q.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> bandpass(std::span<const double> signal, double sample_rate,
                             double center, double bandwidth, int order) {
    return BandpassFilter(sample_rate, center, bandwidth, order).apply(signal);
}

std::vector<double> differentiate(std::span<const double> z, double sample_period) {
    const std::size_t n = z.size();
    if (n < 3) throw TooShort("differentiate needs at least 3 samples");
    std::vector<double> v(n);
    const double inv2h = 0.5 / sample_period;
    for (std::size_t i = 1; i + 1 < n; ++i) v[i] = (z[i + 1] - z[i - 1]) * inv2h;
    v[0] = (z[1] - z[0]) / sample_period;
    v[n - 1] = (z[n - 1] - z[n - 2]) / sample_period;
    return v;
}

double SpectrumEstimate::total_power() const {
    return std::accumulate(density.begin(), density.end(), 0.0) * resolution;
}

SpectrumEstimate SpectrumEstimate::crop(double f_min, double f_max) const {
    SpectrumEstimate out = *this;
    out.frequencies.clear();
    out.density.clear();
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (frequencies[i] >= f_min && frequencies[i] <= f_max) {
            out.frequencies.push_back(frequencies[i]);
            out.density.push_back(density[i]);
        }
    }
    return out;
}

SpectrumEstimate welch_psd(std::span<const double> signal, double sample_rate,
                           std::size_t segment_length, double overlap) {
    if (segment_length < 8) throw TooShort("segment_length >= 8");
    if (segment_length > signal.size()) throw TooShort("segment_length <= signal length");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ValidationError("0 <= overlap < 1");
    const std::size_t n = segment_length;
    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(n) * (1.0 - overlap))));
    const std::size_t count = (signal.size() - n) / hop + 1;

    std::vector<double> window(n);
    double window_power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
        window_power += window[i] * window[i];
    }

    const std::size_t bins = n / 2 + 1;
    std::vector<double> acc(bins, 0.0);
    {
        static std::mutex planner;  // FFTW planning is not thread-safe
        double* in = fftw_alloc_real(n);
        fftw_complex* out = fftw_alloc_complex(bins);
        fftw_plan plan;
        {
            std::lock_guard lock(planner);
            plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        }
        for (std::size_t s = 0; s < count; ++s) {
            const double* seg = signal.data() + s * hop;
            const double mean = std::accumulate(seg, seg + n, 0.0) / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) in[i] = (seg[i] - mean) * window[i];
            fftw_execute(plan);
            for (std::size_t k = 0; k < bins; ++k) acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
        {
            std::lock_guard lock(planner);
            fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }

    SpectrumEstimate est;
    est.resolution = sample_rate / static_cast<double>(n);
    est.segment_length = n;
    est.averages = count;
    est.frequencies.resize(bins);
    est.density.resize(bins);
    const double scale = 1.0 / (sample_rate * window_power * static_cast<double>(count));
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == bins - 1);
        est.frequencies[k] = static_cast<double>(k) * est.resolution;
        est.density[k] = acc[k] * scale * (edge ? 1.0 : 2.0);
    }
    return est;
}

double lorentzian(double f, double a, double f0, double gamma, double b) {
    const double w = 2.0 * kPi * f;
    const double w0 = 2.0 * kPi * f0;
    const double d = w0 * w0 - w * w;
    return a / (d * d + gamma * gamma * w * w) + b;
}

double lorentzian_area(double a, double f0, double gamma) {
    const double w0 = 2.0 * kPi * f0;
    return a * kPi / (2.0 * gamma * w0 * w0) / (2.0 * kPi);
}

namespace {

// Bins clearly above the background: more than ten times the 10th
// percentile of the density.
std::size_t bins_above_floor(const SpectrumEstimate& s) {
    std::vector<double> sorted = s.density;
    if (sorted.empty()) return 0;
    const std::size_t q = sorted.size() / 10;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q), sorted.end());
    const double floor = sorted[q];
    return static_cast<std::size_t>(std::count_if(
        s.density.begin(), s.density.end(), [&](double d) { return d > 10.0 * floor; }));
}

}  // namespace

LorentzianGuess estimate_lorentzian_guess(const SpectrumEstimate& s) {
    if (s.density.empty()) throw DegenerateSpectrum("empty spectrum");
    std::size_t peak = s.density.size();
    for (std::size_t i = 0; i < s.density.size(); ++i)
        if (s.frequencies[i] > 0.0 && (peak == s.density.size() || s.density[i] > s.density[peak]))
            peak = i;
    if (peak == s.density.size()) throw DegenerateSpectrum("no bins above 0 Hz");
    const double h = s.density[peak];
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && s.density[lo] > 0.5 * h) --lo;
    while (hi + 1 < s.density.size() && s.density[hi] > 0.5 * h) ++hi;
    const double fwhm = std::max(s.frequencies[hi] - s.frequencies[lo], s.resolution);
    const double f0 = s.frequencies[peak];
    const double gamma = 2.0 * kPi * fwhm;
    const double w0 = 2.0 * kPi * f0;
    const double floor = *std::min_element(s.density.begin(), s.density.end());
    return {f0, gamma, (h - floor) * gamma * gamma * w0 * w0, floor};
}

LorentzianFit lorentzian_fit(const SpectrumEstimate& s, const LorentzianGuess& guess,
                             int max_iterations) {
    if (s.frequencies.size() != s.density.size()) throw ValidationError("spectrum sizes differ");
    if (!std::isfinite(guess.center_frequency) || !std::isfinite(guess.linewidth) ||
        !std::isfinite(guess.amplitude) || !std::isfinite(guess.noise_floor))
        throw ValidationError("initial guess finite");
    if (bins_above_floor(s) < 5)
        throw DegenerateSpectrum("fewer than 5 bins above the noise floor");

    using Vec4 = Eigen::Vector4d;
    using Mat4 = Eigen::Matrix4d;
    const std::size_t n = s.density.size();
    const double peak = *std::max_element(s.density.begin(), s.density.end());

    auto model = [&](const Vec4& p, std::size_t i) {
        return lorentzian(s.frequencies[i], p[0], p[1], p[2], p[3]);
    };
    // Relative residuals against fixed weights taken from `ref`.
    auto cost = [&](const Vec4& p, const std::vector<double>& w) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (model(p, i) - s.density[i]) * w[i];
            c += r * r;
        }
        return c;
    };
    auto weights = [&](const Vec4& p) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double m = model(p, i);
            w[i] = 1.0 / (m > 0.0 ? m : std::max(s.density[i], 1e-300));
        }
        return w;
    };

    Vec4 p(guess.amplitude, guess.center_frequency, std::abs(guess.linewidth),
           std::max(guess.noise_floor, 0.0));
    double lambda = 1e-3;
    LorentzianFit fit;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const auto w = weights(p);
        const double c0 = cost(p, w);
        Mat4 jtj = Mat4::Zero();
        Vec4 jtr = Vec4::Zero();
        const double w0 = 2.0 * kPi * p[1];
        for (std::size_t i = 0; i < n; ++i) {
            const double om = 2.0 * kPi * s.frequencies[i];
            const double d = w0 * w0 - om * om;
            const double den = d * d + p[2] * p[2] * om * om;
            Vec4 j;
            j[0] = 1.0 / den;
            j[1] = -p[0] / (den * den) * 2.0 * d * 2.0 * w0 * 2.0 * kPi;
            j[2] = -p[0] / (den * den) * 2.0 * p[2] * om * om;
            j[3] = 1.0;
            j *= w[i];
            const double r = (p[0] / den + p[3] - s.density[i]) * w[i];
            jtj.noalias() += j * j.transpose();
            jtr += j * r;
        }
        // The floor column is all-zero when no weight reaches it; keep the
        // system non-singular.
        Vec4 diag = jtj.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        Vec4 delta = Vec4::Zero();
        while (lambda < 1e16) {
            Mat4 a = jtj;
            a.diagonal() += lambda * diag;
            delta = a.ldlt().solve(-jtr);
            Vec4 trial = p + delta;
            trial[3] = std::max(trial[3], 0.0);
            trial[2] = std::abs(trial[2]);
            if (trial.allFinite() && trial[0] > 0.0 && trial[1] > 0.0 && trial[2] > 0.0 &&
                cost(trial, w) <= c0) {
                delta = trial - p;
                p = trial;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        const double floor_scale = 1e-9 * peak;
        const bool small = std::abs(delta[0]) <= 1e-8 * std::abs(p[0]) &&
                           std::abs(delta[1]) <= 1e-8 * std::abs(p[1]) &&
                           std::abs(delta[2]) <= 1e-8 * std::abs(p[2]) &&
                           std::abs(delta[3]) <= 1e-8 * std::max(std::abs(p[3]), floor_scale);
        // A step that cannot lower the cost at any damping means p already
        // sits at a minimum.
        if (!accepted || small) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.amplitude = p[0];
    fit.center_frequency = p[1];
    fit.linewidth = p[2];
    fit.noise_floor = p[3];
    fit.integrated_area = lorentzian_area(p[0], p[1], p[2]);
    fit.iterations = it;
    const auto w = weights(p);
    fit.residual_norm = std::sqrt(cost(p, w) / static_cast<double>(n));
    return fit;
}

double calibration_factor(double fitted_area, double temperature, const ParticleSpec& particle,
                          const TrapSpec& trap) {
    if (!(fitted_area > 0.0)) throw ValidationError("fitted_area > 0");
    return std::sqrt(thermal_position_variance(temperature, trap, particle) / fitted_area);
}

}  // namespace levitate::dsp
