#include "tree_sobolev/tree_sobolev.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "tree_sobolev/extension.hpp"
#include "tree_sobolev/norms.hpp"
#include "tree_sobolev/runner.hpp"
#include "tree_sobolev/walk.hpp"

struct tsob_profile {
  tsob::WalkProfile profile;
};

namespace {

thread_local std::string last_error;

tsob_status to_status(tsob::ErrorCode code) {
  switch (code) {
    case tsob::ErrorCode::invalid_argument: return TSOB_INVALID_ARGUMENT;
    case tsob::ErrorCode::shape_mismatch: return TSOB_SHAPE_MISMATCH;
    case tsob::ErrorCode::not_converged: return TSOB_NOT_CONVERGED;
    case tsob::ErrorCode::limit_exceeded: return TSOB_LIMIT_EXCEEDED;
    case tsob::ErrorCode::io: return TSOB_IO;
  }
  return TSOB_INTERNAL;
}

template <class F>
tsob_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TSOB_OK;
  } catch (const tsob::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TSOB_LIMIT_EXCEEDED;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TSOB_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return TSOB_INTERNAL;
  }
}

void need(bool cond, const char* what) { tsob::require(cond, tsob::ErrorCode::invalid_argument, what); }

void need_len(size_t got, size_t want, const char* what) {
  tsob::require(got == want, tsob::ErrorCode::shape_mismatch,
                std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
}

tsob::TreeWeights weights_from(const double* w, int n) {
  need(w != nullptr && n >= 1, "weights must be a non-empty array");
  return tsob::TreeWeights(std::vector<double>(w, w + n));
}

void copy_matrix(const tsob::Matrix& m, double* out, size_t len) {
  need(out != nullptr, "output buffer is null");
  need_len(len, m.data().size(), "matrix buffer");
  std::memcpy(out, m.data().data(), len * sizeof(double));
}

}  // namespace

extern "C" {

const char* tsob_version(void) { return "0.1.0"; }

const char* tsob_last_error(void) { return last_error.c_str(); }

tsob_status tsob_profile_from_weights(const double* weights, int n, double p, tsob_profile** out) {
  return guarded([&] {
    need(out != nullptr, "out is null");
    *out = nullptr;
    auto prof = tsob::WalkProfile::from_weights(weights_from(weights, n), p);
    *out = new tsob_profile{std::move(prof)};
  });
}

tsob_status tsob_profile_from_q(const double* q, int n, tsob_profile** out) {
  return guarded([&] {
    need(out != nullptr, "out is null");
    *out = nullptr;
    need(q != nullptr && n >= 1, "q must hold n+1 values with n >= 1");
    auto prof = tsob::WalkProfile::from_q(std::vector<double>(q, q + n + 1));
    *out = new tsob_profile{std::move(prof)};
  });
}

void tsob_profile_destroy(tsob_profile* profile) { delete profile; }

int tsob_profile_height(const tsob_profile* profile) { return profile ? profile->profile.height : -1; }

tsob_status tsob_profile_q(const tsob_profile* profile, double* out, size_t len) {
  return guarded([&] {
    need(profile != nullptr && out != nullptr, "null argument");
    need_len(len, profile->profile.q.size(), "q buffer");
    std::memcpy(out, profile->profile.q.data(), len * sizeof(double));
  });
}

tsob_status tsob_profile_x(const tsob_profile* profile, double* out, size_t len) {
  return guarded([&] {
    need(profile != nullptr && out != nullptr, "null argument");
    need_len(len, profile->profile.x.size(), "x buffer");
    std::memcpy(out, profile->profile.x.data(), len * sizeof(double));
  });
}

tsob_status tsob_profile_hitting(const tsob_profile* profile, double* out, size_t len) {
  return guarded([&] {
    need(profile != nullptr, "profile is null");
    copy_matrix(profile->profile.P, out, len);
  });
}

tsob_status tsob_profile_leaf_hits(const tsob_profile* profile, double* out, size_t len) {
  return guarded([&] {
    need(profile != nullptr, "profile is null");
    copy_matrix(profile->profile.B, out, len);
  });
}

tsob_status tsob_profile_increments(const tsob_profile* profile, double* out, size_t len) {
  return guarded([&] {
    need(profile != nullptr, "profile is null");
    copy_matrix(profile->profile.A, out, len);
  });
}

tsob_status tsob_extend(const tsob_profile* profile, const double* leaves, size_t n_leaves, double* vertices_out,
                        size_t n_vertices) {
  return guarded([&] {
    need(profile != nullptr && leaves != nullptr && vertices_out != nullptr, "null argument");
    const int n = profile->profile.height;
    const tsob::TreeShape shape(n);
    need_len(n_leaves, shape.leaf_count(), "leaves");
    need_len(n_vertices, shape.vertex_count(), "vertices");
    const tsob::ScalarField f(tsob::FieldRole::leaves, n, std::vector<double>(leaves, leaves + n_leaves));
    const auto h = tsob::harmonic_extend(profile->profile, f);
    std::memcpy(vertices_out, h.values.data(), n_vertices * sizeof(double));
  });
}

tsob_status tsob_induced_T(const tsob_profile* profile, const double* edges_in, size_t n_edges, double* edges_out) {
  return guarded([&] {
    need(profile != nullptr && edges_in != nullptr && edges_out != nullptr, "null argument");
    const int n = profile->profile.height;
    need_len(n_edges, tsob::TreeShape(n).edge_count(), "edges");
    const tsob::ScalarField g(tsob::FieldRole::edges, n, std::vector<double>(edges_in, edges_in + n_edges));
    const auto t = tsob::induced_T(profile->profile, g);
    std::memcpy(edges_out, t.values.data(), n_edges * sizeof(double));
  });
}

tsob_status tsob_seminorm(const double* weights, int n, const double* vertices, size_t n_vertices, double p,
                          double* out) {
  return guarded([&] {
    need(vertices != nullptr && out != nullptr, "null argument");
    const auto w = weights_from(weights, n);
    need_len(n_vertices, tsob::TreeShape(n).vertex_count(), "vertices");
    const tsob::ScalarField f(tsob::FieldRole::vertices, n, std::vector<double>(vertices, vertices + n_vertices));
    *out = tsob::sobolev_seminorm(w, f, p);
  });
}

tsob_status tsob_trace(const double* weights, int n, const double* leaves, size_t n_leaves, double p,
                       double* vertices_out, tsob_trace_result* result) {
  return guarded([&] {
    need(leaves != nullptr && result != nullptr, "null argument");
    const auto w = weights_from(weights, n);
    need_len(n_leaves, tsob::TreeShape(n).leaf_count(), "leaves");
    const tsob::ScalarField f(tsob::FieldRole::leaves, n, std::vector<double>(leaves, leaves + n_leaves));
    const auto r = tsob::trace_seminorm(w, f, p);
    result->value = r.value;
    result->kkt_residual = r.kkt_residual;
    result->duality_gap = r.duality_gap;
    result->iterations = r.iterations;
    result->converged = r.converged ? 1 : 0;
    if (vertices_out != nullptr) {
      std::memcpy(vertices_out, r.extension.values.data(), r.extension.values.size() * sizeof(double));
    }
    tsob::require(r.converged, tsob::ErrorCode::not_converged, "trace minimization did not converge");
  });
}

tsob_status tsob_theoretical_constants(double p, tsob_constants* out) {
  return guarded([&] {
    need(out != nullptr, "out is null");
    const auto c = tsob::theoretical_constants(p);
    *out = {c.p, c.q, c.C_p, c.C_bar, c.C_hat, c.C_tilde, c.T1_bound};
  });
}

tsob_status tsob_run(const char* config_json, char** out, int* exit_code) {
  return guarded([&] {
    need(config_json != nullptr && out != nullptr && exit_code != nullptr, "null argument");
    *out = nullptr;
    const auto res = tsob::run_config_text(config_json);
    char* buf = static_cast<char*>(std::malloc(res.output.size() + 1));
    if (buf == nullptr) throw std::bad_alloc();
    std::memcpy(buf, res.output.c_str(), res.output.size() + 1);
    *out = buf;
    *exit_code = res.exit_code;
  });
}

void tsob_string_free(char* s) { std::free(s); }

}  // extern "C"
