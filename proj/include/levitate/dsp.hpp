#pragma once

#include <span>
#include <vector>

#include "levitate/physics.hpp"

namespace levitate::dsp {

// Second-order section, b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0, b1, b2;
    double a1, a2;
};

// Digital Butterworth band-pass with edges center -/+ bandwidth/2: analog
// low-pass prototype of the given order, low-pass to band-pass transform on
// pre-warped edges, bilinear transform. Unit gain at the pass-band centre.
class BandpassFilter {
public:
    BandpassFilter(double sample_rate, double center, double bandwidth, int order);

    // Causal, forward-in-time filtering from rest.
    std::vector<double> apply(std::span<const double> signal) const;

    // |H(e^{i 2 pi f / fs})|
    double magnitude(double frequency) const;

    const std::vector<Biquad>& sections() const { return sections_; }
    int order() const { return order_; }

private:
    double sample_rate_;
    int order_;
    std::vector<Biquad> sections_;
};

std::vector<double> bandpass(std::span<const double> signal, double sample_rate,
                             double center, double bandwidth, int order);

// Central differences, one-sided at the ends.
std::vector<double> differentiate(std::span<const double> positions, double sample_period);

enum class Window { Hann };

struct SpectrumEstimate {
    std::vector<double> frequencies;  // Hz
    std::vector<double> density;      // units^2 / Hz, one-sided
    double resolution = 0.0;          // Hz
    Window window = Window::Hann;
    std::size_t segment_length = 0;
    std::size_t averages = 0;

    // Sum of density * resolution; the variance of the input.
    double total_power() const;
    // Bins with frequency in [f_min, f_max].
    SpectrumEstimate crop(double f_min, double f_max) const;
};

// Welch estimate: Hann-windowed, mean-removed segments, averaged one-sided
// periodograms scaled so that total_power() equals the signal variance.
SpectrumEstimate welch_psd(std::span<const double> signal, double sample_rate,
                           std::size_t segment_length = 16384, double overlap = 0.5);

struct LorentzianGuess {
    double center_frequency;  // Hz
    double linewidth;         // rad/s
    double amplitude;
    double noise_floor = 0.0;
};

struct LorentzianFit {
    double center_frequency = 0.0;  // Hz
    double linewidth = 0.0;         // rad/s, Gamma
    double amplitude = 0.0;         // a in a / ((w0^2 - w^2)^2 + Gamma^2 w^2)
    double noise_floor = 0.0;       // b
    double integrated_area = 0.0;   // integral of the resonance over f in [0, inf)
    double residual_norm = 0.0;     // rms of the relative residuals
    int iterations = 0;
    bool converged = false;
};

// a / ((w0^2 - w^2)^2 + Gamma^2 w^2) + b with w = 2 pi f.
double lorentzian(double frequency, double amplitude, double center_frequency,
                  double linewidth, double noise_floor = 0.0);

// a pi / (2 Gamma w0^2) is the integral over angular frequency; the density is
// per Hz, so the variance carried by the peak is that divided by 2 pi.
double lorentzian_area(double amplitude, double center_frequency, double linewidth);

// Peak bin for the centre, half-maximum width for Gamma, peak height for a.
LorentzianGuess estimate_lorentzian_guess(const SpectrumEstimate& spectrum);

// Damped Gauss-Newton (Levenberg-Marquardt) on relative residuals
// (model - data)/model, the weights refreshed from the current model each
// iteration. Converges when every parameter moves by less than 1e-8
// relative; otherwise returns the best iterate with converged = false.
LorentzianFit lorentzian_fit(const SpectrumEstimate& spectrum, const LorentzianGuess& guess,
                             int max_iterations = 200);

// Detector-units-to-metres factor sqrt(k_B T / (m w_z^2) / fitted_area).
double calibration_factor(double fitted_area, double temperature, const ParticleSpec& particle,
                          const TrapSpec& trap);

}  // namespace levitate::dsp
