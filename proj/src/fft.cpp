#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace lrdlab::detail {

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan plan_for(std::size_t n) {
    static std::map<std::size_t, Plan> cache;
    std::lock_guard lock(planner_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second.get();
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    return cache.emplace(n, Plan(p)).first->second.get();
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data) {
    if (data.size() < 2) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(data.size()), buf, buf);
}

}  // namespace lrdlab::detail
