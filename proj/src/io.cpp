#include "tdas/io.hpp"

#include <cstdio>
#include <fstream>

#include "tdas/errors.hpp"

namespace tdas {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void row(std::string& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        out += format_double(v);
        first = false;
    }
    out += '\n';
}

} // namespace

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t_us,x1,x2,jx,jy,jz,g,photon_number\n";
    out.reserve(out.size() + traj.size() * 180);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& x = traj.states[i];
        row(out, {traj.times[i], x.x1, x.x2, x.jx, x.jy, x.jz, traj.couplings[i], x.photon_number()});
    }
    return out;
}

std::string filtered_csv(const Trajectory& traj, double cutoff) {
    const auto jz = lowpass(jz_series(traj), traj.sample_spacing(), cutoff);
    const auto n = lowpass(photon_number_series(traj), traj.sample_spacing(), cutoff);
    std::string out = "t_us,jz,photon_number\n";
    for (std::size_t i = 0; i < traj.size(); ++i) row(out, {traj.times[i], jz[i], n[i]});
    return out;
}

std::string scan_csv(const StabilitySurface& surface) {
    std::string out = "k,tau_us,re_lambda1_radus,im_lambda1_radus,residual,converged\n";
    for (const auto& scan : surface.rows) {
        for (const auto& pt : scan.points) {
            out += format_double(pt.k) + ',' + format_double(pt.tau) + ',';
            if (pt.converged) {
                out += format_double(pt.root.lambda.real()) + ',' +
                       format_double(pt.root.lambda.imag()) + ',' +
                       format_double(pt.root.relative_residual) + ",1\n";
            } else {
                out += "nan,nan,nan,0\n";
            }
        }
    }
    return out;
}

std::string approx_csv(const LinearizedSystem& base, std::span<const double> k_grid,
                       std::span<const double> tau_grid) {
    std::string out = "k,tau_us,re_lambda_approx_radus,im_lambda_approx_radus,residual\n";
    for (double k : k_grid) {
        for (double tau : tau_grid) {
            const ApproxRoot a = approx_rightmost(base.with_feedback(k, tau));
            row(out, {k, tau, a.lambda().real(), a.lambda().imag(), a.residual});
        }
    }
    return out;
}

std::string sweep_csv(std::span<const SweepPoint> points) {
    std::string out = "g_over_gc,phase,k,tau_us,fluct,converged\n";
    for (const auto& pt : points) {
        out += format_double(pt.g_over_gc) + ',' + std::string(to_string(pt.phase)) + ',' +
               format_double(pt.k) + ',' + format_double(pt.tau) + ',' +
               (pt.converged ? format_double(pt.fluct) : std::string("nan")) + ',' +
               (pt.converged ? "1" : "0") + '\n';
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw Error("failed writing " + path.string());
}

} // namespace tdas
