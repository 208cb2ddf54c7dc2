#pragma once

#include <cmath>

// Power-unit conversions. Everything internal runs in linear watts;
// dB values appear only at the config/report boundary.

namespace hris {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline double dbw_to_watt(double dbw) { return std::pow(10.0, dbw / 10.0); }
inline double watt_to_dbw(double w) { return 10.0 * std::log10(w); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

}  // namespace hris
