#!/usr/bin/env python3
"""Generate the ephemeris tables shipped under data/ephem/.

Two tables are produced:

* solar_2012-09-30.tbl: heliocentric planet states at JD 2456200.5 TDB, in the
  J2000 ecliptic frame, from the Standish mean Keplerian elements (1800-2050
  fit, JPL Solar System Dynamics "Keplerian Elements for Approximate Positions
  of the Major Planets", Table 1). Accuracy is at the arcminute level, which is
  far below what the circular coplanar model resolves.

* jupiter_2016-04-09.tbl: jovicentric Galilean satellite states at
  JD 2457487.5 TDB, in Jupiter's equatorial frame. Longitudes are the E5 mean
  longitudes (Lieske 1998, as tabulated in Meeus, Astronomical Algorithms,
  ch. 44) plus the leading periodic terms; orbits are taken circular and
  equatorial.

Usage: make_ephem_tables.py <output dir>
"""

import math
import sys

AU_KM = 149597870.7
DAY_S = 86400.0
GM_SUN = 1.32712440041279419e11

# name: (a, e, I, L, varpi, Omega) and rates per Julian century
STANDISH = {
    "Mercury": ((0.38709927, 0.20563593, 7.00497902, 252.25032350, 77.45779628, 48.33076593),
                (0.00000037, 0.00001906, -0.00594749, 149472.67411175, 0.16047689, -0.12534081)),
    "Venus": ((0.72333566, 0.00677672, 3.39467605, 181.97909950, 131.60246718, 76.67984255),
              (0.00000390, -0.00004107, -0.00078890, 58517.81538729, 0.00268329, -0.27769418)),
    "Earth": ((1.00000261, 0.01671123, -0.00001531, 100.46457166, 102.93768193, 0.0),
              (0.00000562, -0.00004392, -0.01294668, 35999.37244981, 0.32327364, 0.0)),
    "Mars": ((1.52371034, 0.09339410, 1.84969142, -4.55343205, -23.94362959, 49.55953891),
             (0.00001847, 0.00007882, -0.00813131, 19140.30268499, 0.44441088, -0.29257343)),
    "Jupiter": ((5.20288700, 0.04838624, 1.30439695, 34.39644051, 14.72847983, 100.47390909),
                (-0.00011607, -0.00013253, -0.00183714, 3034.74612775, 0.21252668, 0.20469106)),
    "Saturn": ((9.53667594, 0.05386179, 2.48599187, 49.95424423, 92.59887831, 113.66242448),
               (-0.00125060, -0.00050991, 0.00193609, 1222.49362201, -0.41897216, -0.28867794)),
    "Uranus": ((19.18916464, 0.04725744, 0.77263783, 313.23810451, 170.95427630, 74.01692503),
               (-0.00196176, -0.00004397, -0.00242939, 428.48202785, 0.40805281, 0.04240589)),
    "Neptune": ((30.06992276, 0.00859048, 1.77004347, -55.12002969, 44.96476227, 131.78422574),
                (0.00026291, 0.00005105, 0.00035372, 218.45945325, -0.32241464, -0.00508664)),
}

# planet-system GM, km^3/s^2 (matches data/constants/solar_system.txt)
GM_PLANET = {
    "Mercury": 22031.868551, "Venus": 324858.592, "Earth": 403503.235502,
    "Mars": 42828.375214, "Jupiter": 126712764.1, "Saturn": 37940584.8418,
    "Uranus": 5794556.4, "Neptune": 6836527.10058,
}


def kepler_E(M, e):
    E = M if e < 0.8 else math.pi
    for _ in range(50):
        dE = (E - e * math.sin(E) - M) / (1.0 - e * math.cos(E))
        E -= dE
        if abs(dE) < 1e-15:
            break
    return E


def elements_to_state(gm, a, e, inc, raan, argp, M):
    E = kepler_E(M, e)
    cE, sE = math.cos(E), math.sin(E)
    fac = math.sqrt(1.0 - e * e)
    r = a * (1.0 - e * cE)
    xp, yp = a * (cE - e), a * fac * sE
    n = math.sqrt(gm / a ** 3)
    vxp, vyp = -a * n * sE / (1.0 - e * cE), a * n * fac * cE / (1.0 - e * cE)
    cO, sO = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(inc), math.sin(inc)
    P = (cw * cO - sw * sO * ci, cw * sO + sw * cO * ci, sw * si)
    Q = (-sw * cO - cw * sO * ci, -sw * sO + cw * cO * ci, cw * si)
    pos = [xp * P[k] + yp * Q[k] for k in range(3)]
    vel = [vxp * P[k] + vyp * Q[k] for k in range(3)]
    assert abs(math.sqrt(sum(p * p for p in pos)) - r) < 1e-6 * r
    return pos, vel


def solar_table(jd):
    T = (jd - 2451545.0) / 36525.0
    rows = []
    for name, (base, rate) in STANDISH.items():
        a, e, I, L, varpi, Om = (b + r * T for b, r in zip(base, rate))
        M = math.radians((L - varpi + 180.0) % 360.0 - 180.0)
        argp = math.radians(varpi - Om)
        pos, vel = elements_to_state(GM_SUN + GM_PLANET[name], a * AU_KM, e,
                                     math.radians(I), math.radians(Om), argp, M)
        rows.append((jd, name, pos, vel))
    return rows


def galilean_table(jd):
    t = jd - 2443000.5
    l1 = 106.07719 + 203.488955790 * t
    l2 = 175.73161 + 101.374724735 * t
    l3 = 120.55883 + 50.317609207 * t
    l4 = 84.44459 + 21.571071177 * t
    pi3 = 188.18400 + 0.00712734 * t
    pi4 = 335.28680 + 0.00184000 * t
    s = lambda deg: math.sin(math.radians(deg))
    lon = {
        "Io": l1 + 0.47259 * s(2 * (l1 - l2)),
        "Europa": l2 + 1.06476 * s(2 * (l2 - l3)),
        "Ganymede": l3 + 0.16490 * s(l3 - pi3) + 0.09081 * s(l3 - pi4),
        "Callisto": l4 + 0.84287 * s(l4 - pi4),
    }
    radius = {"Io": 421800.0, "Europa": 671100.0, "Ganymede": 1070400.0, "Callisto": 1882700.0}
    gm = {"Io": 5959.916, "Europa": 3202.739, "Ganymede": 9887.834, "Callisto": 7179.289}
    gm_jup = 126686531.900
    rows = []
    for name in ("Io", "Europa", "Ganymede", "Callisto"):
        ang = math.radians(lon[name] % 360.0)
        r = radius[name]
        v = math.sqrt((gm_jup + gm[name]) / r)
        pos = [r * math.cos(ang), r * math.sin(ang), 0.0]
        vel = [-v * math.sin(ang), v * math.cos(ang), 0.0]
        rows.append((jd, name, pos, vel))
    return rows


def write(path, header, rows):
    with open(path, "w") as f:
        for line in header:
            f.write("# " + line + "\n")
        f.write("# jd body x y z vx vy vz\n")
        for jd, name, p, v in rows:
            f.write("%.6f %s %.9e %.9e %.9e %.12e %.12e %.12e\n" % (jd, name, *p, *v))


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "."
    write(out + "/solar_2012-09-30.tbl",
          ["frame: J2000 ecliptic, center: Sun, units: km and km/s, TDB",
           "source: Standish mean Keplerian elements, 1800-2050 fit (Earth row is the EM barycenter)",
           "generated by tools/make_ephem_tables.py"],
          solar_table(2456200.5))
    write(out + "/jupiter_2016-04-09.tbl",
          ["frame: Jupiter equator, center: Jupiter, units: km and km/s, TDB",
           "source: E5 mean longitudes plus leading periodic terms; circular equatorial orbits",
           "generated by tools/make_ephem_tables.py"],
          galilean_table(2457487.5))


if __name__ == "__main__":
    main()
