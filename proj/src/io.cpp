// SPDX-License-Identifier: Apache-2.0

#include "cvs/io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace cvs {

namespace {

void write_doubles(std::ostream& os, const std::vector<Real>& buf) {
    os.write(reinterpret_cast<const char*>(buf.data()),
             std::streamsize(buf.size() * sizeof(Real)));
}

std::vector<Real> read_doubles(std::istream& is, size_t n) {
    std::vector<Real> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n * sizeof(Real)));
    if (!is) throw DomainError("CVS1: truncated payload");
    return buf;
}

}  // namespace

void write_cvs1(std::ostream& os, const TorusScalar& f, const std::string& name) {
    os << "CVS1 " << f.grid().nx << " " << f.grid().ny << " " << name << "\n";
    std::vector<Real> buf;
    buf.reserve(size_t(f.grid().nx * f.grid().ny));
    for (Index i = 0; i < f.grid().nx; ++i)
        for (Index j = 0; j < f.grid().ny; ++j) buf.push_back(f.values()(i, j));
    write_doubles(os, buf);
}

void write_cvs1(std::ostream& os, const StripScalar& f, const std::string& name) {
    os << "CVS1 " << f.grid().nx << " " << f.grid().ny << " " << f.nz() << " " << name
       << "\n";
    std::vector<Real> buf;
    buf.reserve(size_t(f.grid().nx * f.grid().ny * f.nz()));
    for (Index i = 0; i < f.grid().nx; ++i)
        for (Index j = 0; j < f.grid().ny; ++j)
            for (Index k = 0; k < f.nz(); ++k) buf.push_back(f.data()(i + f.grid().nx * j, k));
    write_doubles(os, buf);
}

void write_cvs1(const std::string& path, const TorusScalar& f, const std::string& name) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("CVS1: cannot open " + path);
    write_cvs1(os, f, name);
}

void write_cvs1(const std::string& path, const StripScalar& f, const std::string& name) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("CVS1: cannot open " + path);
    write_cvs1(os, f, name);
}

Cvs1Header read_cvs1_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("CVS1: missing header");
    std::istringstream ls(line);
    std::string magic;
    ls >> magic;
    if (magic != "CVS1") throw DomainError("CVS1: bad magic '" + magic + "'");
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    Cvs1Header h;
    if (tok.size() == 3) {
        h.nx = std::stol(tok[0]);
        h.ny = std::stol(tok[1]);
        h.name = tok[2];
    } else if (tok.size() == 4) {
        h.nx = std::stol(tok[0]);
        h.ny = std::stol(tok[1]);
        h.nz = std::stol(tok[2]);
        h.name = tok[3];
    } else {
        throw DomainError("CVS1: malformed header '" + line + "'");
    }
    return h;
}

TorusScalar read_cvs1_torus(std::istream& is, std::string* name) {
    Cvs1Header h = read_cvs1_header(is);
    if (h.nz != 0) throw DomainError("CVS1: expected torus field, found strip");
    auto buf = read_doubles(is, size_t(h.nx * h.ny));
    Array2 v(h.nx, h.ny);
    size_t p = 0;
    for (Index i = 0; i < h.nx; ++i)
        for (Index j = 0; j < h.ny; ++j) v(i, j) = buf[p++];
    if (name) *name = h.name;
    return TorusScalar(TorusGrid(h.nx, h.ny), std::move(v));
}

StripScalar read_cvs1_strip(std::istream& is, std::shared_ptr<const ChebGrid> zgrid,
                            Side side, std::string* name) {
    Cvs1Header h = read_cvs1_header(is);
    if (h.nz == 0) throw DomainError("CVS1: expected strip field, found torus");
    if (h.nz != zgrid->n) throw DomainError("CVS1: nz mismatch");
    auto buf = read_doubles(is, size_t(h.nx * h.ny * h.nz));
    TorusGrid g(h.nx, h.ny);
    Eigen::ArrayXXd data(h.nx * h.ny, h.nz);
    size_t p = 0;
    for (Index i = 0; i < h.nx; ++i)
        for (Index j = 0; j < h.ny; ++j)
            for (Index k = 0; k < h.nz; ++k) data(i + h.nx * j, k) = buf[p++];
    if (name) *name = h.name;
    return StripScalar(g, std::move(zgrid), side, std::move(data));
}

TorusScalar read_cvs1_torus(const std::string& path, std::string* name) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("CVS1: cannot open " + path);
    return read_cvs1_torus(is, name);
}

}  // namespace cvs
