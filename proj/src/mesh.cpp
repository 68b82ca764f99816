#include "trapspec/mesh.hpp"

#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

namespace trapspec {

namespace {

double signedArea(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

double angleAt(const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
}

std::uint64_t edgeKey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

void markBoundary(Mesh& mesh) {
    std::unordered_map<std::uint64_t, int> uses;
    uses.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) ++uses[edgeKey(t[k], t[(k + 1) % 3])];
    mesh.boundary.assign(mesh.nodes.size(), 0);
    for (const auto& [key, count] : uses) {
        if (count == 1) {
            mesh.boundary[static_cast<std::size_t>(key >> 32)] = 1;
            mesh.boundary[static_cast<std::size_t>(key & 0xffffffffULL)] = 1;
        }
    }
}

double longestEdge(const Mesh& mesh) {
    double s = 0.0;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k)
            s = std::max(s, (mesh.nodes[t[k]] - mesh.nodes[t[(k + 1) % 3]]).norm());
    return s;
}

}  // namespace

std::size_t Mesh::boundaryNodeCount() const {
    return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), 1));
}

double Mesh::maxAngle() const {
    double m = 0.0;
    for (const auto& t : triangles) {
        const Vec2 &a = nodes[t[0]], &b = nodes[t[1]], &c = nodes[t[2]];
        m = std::max({m, angleAt(a, b, c), angleAt(b, c, a), angleAt(c, a, b)});
    }
    return m;
}

double Mesh::area() const {
    double s = 0.0;
    for (const auto& t : triangles) s += signedArea(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    return s;
}

void checkMeshQuality(const Mesh& mesh, double maxAngleDegrees) {
    const double cap = maxAngleDegrees * kPi / 180.0;
    const double scale = std::max(mesh.size, 1e-300);
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        const Vec2 &a = mesh.nodes[t[0]], &b = mesh.nodes[t[1]], &c = mesh.nodes[t[2]];
        const double area = signedArea(a, b, c);
        if (!(area > 1e-14 * scale * scale)) {
            std::ostringstream msg;
            msg << "degenerate or inverted triangle " << i << " (area " << area << ")";
            throw MeshError(msg.str());
        }
        const double worst = std::max({angleAt(a, b, c), angleAt(b, c, a), angleAt(c, a, b)});
        if (worst > cap + 1e-12) {
            std::ostringstream msg;
            msg << "triangle " << i << " has angle " << worst * 180.0 / kPi << " deg above cap "
                << maxAngleDegrees;
            throw MeshError(msg.str());
        }
    }
}

Mesh refineUniform(const Mesh& mesh) {
    Mesh out;
    out.nodes = mesh.nodes;
    out.triangles.reserve(mesh.triangles.size() * 4);
    std::unordered_map<std::uint64_t, int> midpoint;
    midpoint.reserve(mesh.triangles.size() * 3);
    auto mid = [&](int a, int b) {
        const auto key = edgeKey(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
        midpoint.emplace(key, id);
        return id;
    };
    for (const auto& t : mesh.triangles) {
        const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
        out.triangles.push_back({t[0], ab, ca});
        out.triangles.push_back({ab, t[1], bc});
        out.triangles.push_back({ca, bc, t[2]});
        out.triangles.push_back({ab, bc, ca});
    }
    out.size = 0.5 * mesh.size;
    markBoundary(out);
    return out;
}

Mesh meshPolygon(const Polygon& polygon, double meshSize, double maxAngleDegrees) {
    if (!(meshSize > 0.0)) throw MeshError("mesh size must be positive");
    Mesh mesh;
    const auto& v = polygon.vertices();
    const int n = static_cast<int>(v.size());
    mesh.nodes = v;
    if (n == 3) {
        mesh.triangles.push_back({0, 1, 2});
    } else if (n == 4) {
        // Shorter diagonal; ties go to the 0-2 diagonal.
        if ((v[1] - v[3]).norm() < (v[0] - v[2]).norm() * (1.0 - 1e-12)) {
            mesh.triangles.push_back({0, 1, 3});
            mesh.triangles.push_back({1, 2, 3});
        } else {
            mesh.triangles.push_back({0, 1, 2});
            mesh.triangles.push_back({0, 2, 3});
        }
    } else {
        mesh.nodes.push_back(polygon.centroid());
        for (int i = 0; i < n; ++i) mesh.triangles.push_back({i, (i + 1) % n, n});
    }
    mesh.size = longestEdge(mesh);
    markBoundary(mesh);
    checkMeshQuality(mesh, maxAngleDegrees);
    while (mesh.size > meshSize * (1.0 + 1e-12)) mesh = refineUniform(mesh);
    return mesh;
}

FemSystem assembleP1(const Mesh& mesh, BoundaryCondition bc) {
    FemSystem sys;
    const std::size_t nNodes = mesh.nodes.size();
    std::vector<int> nodeToDof(nNodes, -1);
    for (std::size_t i = 0; i < nNodes; ++i) {
        if (bc == BoundaryCondition::Neumann || !mesh.boundary[i]) {
            nodeToDof[i] = static_cast<int>(sys.dofToNode.size());
            sys.dofToNode.push_back(static_cast<int>(i));
        }
    }
    const int nDofs = static_cast<int>(sys.dofToNode.size());
    if (nDofs == 0) throw MeshError("mesh has no interior degrees of freedom");

    std::vector<Eigen::Triplet<double>> kTrip, mTrip;
    kTrip.reserve(mesh.triangles.size() * 9);
    mTrip.reserve(mesh.triangles.size() * 9);
    for (const auto& t : mesh.triangles) {
        const Vec2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]], &p2 = mesh.nodes[t[2]];
        const double area = signedArea(p0, p1, p2);
        // Gradients of the barycentric coordinates times 2*area.
        const double bx[3] = {p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y()};
        const double by[3] = {p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x()};
        for (int i = 0; i < 3; ++i) {
            const int di = nodeToDof[t[i]];
            if (di < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = nodeToDof[t[j]];
                if (dj < 0) continue;
                kTrip.emplace_back(di, dj, (bx[i] * bx[j] + by[i] * by[j]) / (4.0 * area));
                mTrip.emplace_back(di, dj, area / 12.0 * (i == j ? 2.0 : 1.0));
            }
        }
    }
    sys.stiffness.resize(nDofs, nDofs);
    sys.mass.resize(nDofs, nDofs);
    sys.stiffness.setFromTriplets(kTrip.begin(), kTrip.end());
    sys.mass.setFromTriplets(mTrip.begin(), mTrip.end());
    return sys;
}

}  // namespace trapspec
