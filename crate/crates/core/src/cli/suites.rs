//! The verification grids. Each returns an unfinished [`Report`]; the caller
//! decides matches under the configured backend with [`Report::finish`].

use super::{parse_rational, Case, Command, Group, Report, RunConfig};
use crate::character::{
    enumerate_chars, enumerate_norm_one_chars, psi_angle, MultChar, NormOneChar, NormOneGroup, Side, UnitGroup,
};
use crate::charsums::{
    e1_sum, find_nonvanishing_e1, gauss_unit_sum, kloosterman_sweep, stability_radius, stability_violation,
    unramified_kloosterman_nonzero, NonvanishingSearch, SweepMode,
};
use crate::error::{Error, Result};
use crate::ring::{ipow, norm_one_reps, units_f, ExtNumber, FieldContext, Padic};
use crate::scalar::{qpow, Cyc, LPoly, LaurentRational};
use crate::schwartz::{make_phi_il, make_phi_m, make_phi_m_chi, SchwartzFn};
use crate::weil::{
    gl2_n, gl2_nbar, gl2_t, gl2_w, howe_support_scan_gl2, howe_support_scan_u11, howe_vector_gl2, howe_vector_u11,
    theta_torus_w_gl2, theta_torus_w_u11, u11_n, u11_nbar, u11_t, u11_w, GammaCyc, HoweLevel, Orientation, WKernel,
    WeilGl2, WeilU11,
};
use crate::zeta::{
    flat_section_gl2, flat_section_u11, gamma_from_fe_gl2, gamma_from_fe_u11_unram, gamma_mult as gamma_mult_fn,
    gamma_transform, howe_zeta_gl2, howe_zeta_u11, section_nbar_closed, section_wn_closed, tate_gamma as tate_gamma_fn,
    unram_zeta_u11, unram_zeta_u11_symbolic, GammaFactor, Provenance, PsiRule, SVar,
};
use rayon::prelude::*;

fn qc(p: u64, k: i64) -> Cyc {
    Cyc::from_rational(qpow(p, k))
}

fn f_chars(ctx: &FieldContext, deg: u32) -> Result<Vec<MultChar>> {
    let g = UnitGroup::new(ctx, Side::F, deg.max(1))?;
    enumerate_chars(&g, deg, &Cyc::one())
}

fn mu0(ctx: &FieldContext) -> Result<MultChar> {
    MultChar::unramified(ctx, Side::E, Cyc::from_int(-1))
}

/// Run `f` on each item in parallel and keep the input order.
fn par_cases<T: Sync + Send>(items: &[T], f: impl Fn(&T) -> Vec<Case> + Sync + Send) -> Vec<Case> {
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

fn or_fail(id: String, expected: &str, r: Result<Case>) -> Case {
    r.unwrap_or_else(|e| Case::failed(id, expected, &e))
}

pub fn gauss(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("gauss", "Gauss sums ∫_{O^×} χ(u)ψ(p^k u) d*u over k ∈ [−4, 2]", cfg);
    let q = ctx.p as i64;
    let triv = MultChar::trivial(&ctx, Side::F)?;
    for k in -4..=2 {
        let want = match k {
            k if k >= 0 => Cyc::from_ratio(q - 1, q),
            -1 => Cyc::from_ratio(-1, q),
            _ => Cyc::zero(),
        };
        let id = format!("chi=trivial k={k}");
        rep.push(or_fail(id.clone(), &want.to_string(), gauss_unit_sum(&ctx, &triv, k).map(|v| Case::cyc(id, &want, &v))));
    }
    let chars: Vec<MultChar> = f_chars(&ctx, cfg.max_degree)?.into_iter().filter(|c| c.degree > 0).collect();
    let tol = cfg.tolerance;
    rep.cases.extend(par_cases(&chars, |chi| {
        (-4..=2)
            .map(|k| {
                let id = format!("chi={} deg={} k={k}", chi.id(), chi.degree);
                let zero = k != -(chi.degree as i32);
                or_fail(id.clone(), if zero { "0" } else { "nonzero" }, gauss_unit_sum(&ctx, chi, k).map(|v| Case::vanishing(id, zero, &v, tol)))
            })
            .collect()
    }));
    Ok(rep)
}

pub fn kloosterman(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new(
        "kloosterman",
        "vanishing of ∫_{|x|=q^k} ψ(x + a/x)χ(x) d*x for |a| = q^n against the degree/parity trichotomy",
        cfg,
    );
    let mode = if ctx.p == 3 { SweepMode::Exhaustive } else { SweepMode::Classes };
    let rows = kloosterman_sweep(&ctx, cfg.max_shell, cfg.max_degree, mode)?;
    let mut false_nonzero = 0;
    let mut false_zero = 0;
    let mut unram_ok = 0;
    let mut unram_total = 0;
    for r in &rows {
        if r.is_zero && r.predicate {
            false_nonzero += 1;
        }
        if !r.is_zero && !r.predicate {
            false_zero += 1;
        }
        if r.degree == 0 {
            unram_total += 1;
            if !r.is_zero == unramified_kloosterman_nonzero(ctx.p, r.n, r.k, r.a_class) {
                unram_ok += 1;
            }
        }
        rep.push(Case::check(
            format!("chi={} n={} k={} a0={} mod {}", r.chi, r.n, r.k, r.a_class, r.a_modulus),
            if r.predicate { "nonzero" } else { "0" },
            r.value.to_string(),
            r.matches(),
        ));
    }
    rep.notes.push(format!("{} rows; predicted nonzero but zero: {false_nonzero}; predicted zero but nonzero: {false_zero}", rows.len()));
    rep.notes.push(format!("unramified χ against the stationary-phase predicate: {unram_ok}/{unram_total}"));
    Ok(rep)
}

pub fn e1(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("e1", "∫_{E¹} χ(u)ψ(tr(au)) du: trivial, vanishing and nonvanishing patterns", cfg);
    let top = cfg.precision.min(4);
    let grp = NormOneGroup::new(&ctx, top)?;
    let chars = enumerate_norm_one_chars(&grp, top);
    let triv = NormOneChar::trivial(NormOneGroup::new(&ctx, 1)?);
    for (v, a, b) in [(0, 1, 0), (0, 2, 1), (1, 1, 1), (2, 0, 1)] {
        let x = ExtNumber::new(ctx.p, ctx.prec, ctx.omega, v, a, b);
        let id = format!("trivial a=p^{v}({a}+{b}ω)");
        rep.push(or_fail(id.clone(), "1", e1_sum(&ctx, &triv, &x, 1).map(|s| Case::cyc(id, &Cyc::one(), &s))));
    }
    let tol = cfg.tolerance;
    for n in 1..=3i32 {
        let ring = ctx.galois_ring(n as u32);
        let units = ring.units();
        // vanishing above the bound on a sample of cosets
        let step = (units.len() / 12).max(1);
        let sample: Vec<_> = units.iter().step_by(step).copied().collect();
        let big: Vec<&NormOneChar> = chars.iter().filter(|c| c.degree as i32 > n.max(1)).collect();
        rep.cases.extend(par_cases(&sample, |&u| {
            let a = ExtNumber::from_residue(ctx.p, ctx.prec, ctx.omega, -n, u);
            big.iter()
                .map(|chi| {
                    let id = format!("n={n} a={u:?} chi={} deg={}", chi.k, chi.degree);
                    or_fail(id.clone(), "0", e1_sum(&ctx, chi, &a, 1).map(|s| Case::vanishing(id, true, &s, tol)))
                })
                .collect()
        }));
        // every coset has a character of degree ≤ n that does not vanish
        rep.cases.extend(par_cases(&units, |&u| {
            let a = ExtNumber::from_residue(ctx.p, ctx.prec, ctx.omega, -n, u);
            let id = format!("n={n} a={u:?} nonvanishing");
            vec![match find_nonvanishing_e1(&ctx, &a, 1) {
                Ok((chi, v)) => Case::check(id, format!("some χ of degree ≤ {n}"), format!("χ deg {} value {v}", chi.degree), chi.degree as i32 <= n),
                Err(e) => Case::failed(id, "some χ", &e),
            }]
        }));
    }
    Ok(rep)
}

pub fn weil_equivariance(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("weil-equivariance", "ω(n)φ^m = ψ^{-1}(n)φ^m on N_m and ω(n̄)φ^m = φ^m on N̄_m, F² and E models", cfg);
    for m in 1..=cfg.m_max {
        let hl = HoweLevel { m };
        let phi = make_phi_m(&ctx, m)?;
        for chi in f_chars(&ctx, m as u32)? {
            for kernel in [WKernel::Derived, WKernel::Displayed] {
                let r = WeilGl2::new(-1, kernel, chi.clone());
                let tag = format!("GL2 {kernel:?} m={m} chi={}", chi.id());
                rep.cases.extend(equivariance_cases(&tag, &hl, &ctx, &phi, |b, f| r.act_n(b, f), |x, f| r.act_nbar(x, f))?);
            }
        }
        let g = NormOneGroup::new(&ctx, m as u32)?;
        for chi in enumerate_norm_one_chars(&g, m as u32) {
            let r = WeilU11::new(mu0(&ctx)?, -1, chi.clone());
            let phi = make_phi_m_chi(&ctx, m as u32, &chi)?;
            let tag = format!("U11 m={m} chi={}", chi.k);
            rep.cases.extend(equivariance_cases(&tag, &hl, &ctx, &phi, |b, f| r.act_n(b, f), |x, f| r.act_nbar(x, f))?);
        }
    }
    Ok(rep)
}

fn equivariance_cases(
    tag: &str,
    hl: &HoweLevel,
    ctx: &FieldContext,
    phi: &SchwartzFn,
    act_n: impl Fn(&Padic, &SchwartzFn) -> Result<SchwartzFn>,
    act_nbar: impl Fn(&Padic, &SchwartzFn) -> Result<SchwartzFn>,
) -> Result<Vec<Case>> {
    let mut out = Vec::new();
    let mut bad_n = Vec::new();
    let reps = hl.n_reps(ctx);
    for b in &reps {
        let want = phi.scale(&psi_angle(b)?.neg().root());
        if !act_n(b, phi)?.same_as(&want)? {
            bad_n.push(format!("{}·p^{}", b.u, b.v));
        }
    }
    out.push(Case::check(format!("{tag} N_m ({} elements)", reps.len()), "ψ^{-1}(n)φ", format!("{} failures {:?}", bad_n.len(), bad_n), bad_n.is_empty()));
    let reps = hl.nbar_reps(ctx, 2);
    let mut bad = 0;
    for x in &reps {
        if !act_nbar(x, phi)?.same_as(phi)? {
            bad += 1;
        }
    }
    out.push(Case::check(format!("{tag} N̄_m ({} elements)", reps.len()), "fixed", format!("{bad} failures"), bad == 0));
    Ok(out)
}

pub fn howe(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("howe", "Howe vectors: W(1) = 1, J_m-eigenvectors, torus supports, E¹(1+P_E^m) values", cfg);
    let p = ctx.p;
    for m in 1..=cfg.m_max {
        let hl = HoweLevel { m };
        let pm = ipow(p, m as u32) as i64;
        for sign in [1, -1] {
            let r = WeilGl2::new(sign, WKernel::Derived, MultChar::trivial(&ctx, Side::F)?);
            let seed = make_phi_m(&ctx, 1)?.scale(&qc(p, 1));
            let tag = format!("GL2 sign={sign} m={m}");
            let v = howe_vector_gl2(&ctx, &r, &seed, m)?;
            let one = ctx.f(1);
            rep.push(Case::cyc(format!("{tag} W(1)"), &Cyc::one(), &r.whittaker(&ctx, &v, &gl2_t(&one, &one))?));
            // J_m generators: n(P^{-m}), the torus 1 + P^m, n̄(P^{3m})
            let mut gens = Vec::new();
            for b in [Padic::new(p, ctx.prec, -m, 1), Padic::new(p, ctx.prec, -m, 2)] {
                let eig = if sign > 0 { psi_angle(&b)?.root() } else { psi_angle(&b)?.neg().root() };
                gens.push((format!("n({}p^{})", b.u, b.v), gl2_n(&b), Gen::N(b.clone()), eig));
            }
            let u = ctx.f(1 + pm);
            gens.push(("t(1+p^m, 1)".into(), gl2_t(&u, &one), Gen::T(u.clone(), one.clone()), Cyc::one()));
            gens.push(("t(1, 1+p^m)".into(), gl2_t(&one, &u), Gen::T(one.clone(), u.clone()), Cyc::one()));
            let x = Padic::p_pow(p, ctx.prec, 3 * m);
            gens.push(("n̄(p^{3m})".into(), gl2_nbar(&x), Gen::Nbar(x), Cyc::one()));
            for (name, g, gen, eig) in gens {
                if !hl.in_j_gl2(&g) {
                    rep.push(Case::check(format!("{tag} {name} in J_m"), "true", "false", false));
                    continue;
                }
                let moved = match &gen {
                    Gen::N(b) => r.act_n(b, &v)?,
                    Gen::T(a1, a2) => r.act_t(a1, a2, &v)?,
                    Gen::Nbar(x) => r.act_nbar(x, &v)?,
                };
                let ok = moved.same_as(&v.scale(&eig))?;
                rep.push(Case::check(format!("{tag} J_m eigen {name}"), format!("{eig}"), if ok { "eigen" } else { "not eigen" }, ok));
            }
            let s = cfg.max_shell.min(4);
            let scan = howe_support_scan_gl2(&ctx, &r, &v, m, (-s, s), (m + 1) as u32);
            rep.push(match scan {
                Ok(rows) => Case::check(format!("{tag} supports on shells [−{s}, {s}]"), "no violation", format!("{} points", rows.len()), rows.iter().any(|x| !x.at_t.is_zero())),
                Err(e) => Case::failed(format!("{tag} supports"), "no violation", &e),
            });
        }
        let g1 = NormOneGroup::new(&ctx, 1)?;
        for chi in enumerate_norm_one_chars(&g1, 1).into_iter().take(2) {
            let mu = mu0(&ctx)?;
            let r = WeilU11::new(mu.clone(), 1, chi.clone());
            let tag = format!("U11 m={m} chi={}", chi.k);
            let seed = make_phi_m_chi(&ctx, 1, &chi)?;
            let v = match howe_vector_u11(&ctx, &r, &seed, m) {
                Ok(v) => v,
                Err(e) => {
                    rep.push(Case::failed(format!("{tag} W(1)"), "1", &e));
                    continue;
                }
            };
            let w1 = r.whittaker(&ctx, &v, &u11_t(&ctx.e(1, 0))?)?;
            rep.push(Case::check(format!("{tag} W(1)"), "1", format!("{} γ^{}", w1.value, w1.gamma), w1.value.is_one() && w1.gamma == 0));
            let b = Padic::new(p, ctx.prec, -m, 1);
            let eig = psi_angle(&b)?.root();
            let ok = r.act(&u11_n(&ctx, &b), &v)?.same_as(&v.scale(&eig))?;
            rep.push(Case::check(format!("{tag} J_m eigen n(p^-m)"), eig.to_string(), if ok { "eigen" } else { "not eigen" }, ok));
            for (name, a) in [("t(1+p^m)", ctx.e(1 + pm, 0)), ("t(1+p^m ω)", ctx.e(1, pm))] {
                let ok = r.act_t(&a, &v)?.same_as(&v)?;
                rep.push(Case::check(format!("{tag} J_m eigen {name}"), "1", if ok { "eigen" } else { "not eigen" }, ok));
            }
            let x = Padic::p_pow(p, ctx.prec, 3 * m);
            let ok = r.act_nbar(&x, &v)?.same_as(&v)?;
            rep.push(Case::check(format!("{tag} J_m eigen n̄(p^3m)"), "1", if ok { "eigen" } else { "not eigen" }, ok));
            let s = (cfg.max_shell.min(4) + 1) / 2;
            let scan = howe_support_scan_u11(&ctx, &r, &v, m, (-s, s), m as u32);
            rep.push(match scan {
                Ok(rows) => Case::check(format!("{tag} supports on |a|_E ∈ [q^-{}, q^{}]", 2 * s, 2 * s), "no violation", format!("{} points", rows.len()), true),
                Err(e) => Case::failed(format!("{tag} supports"), "no violation", &e),
            });
            // W(t(zu)) = ω_π(z) with ω_π = μ|_{E¹}·χ
            let zs = norm_one_reps(&ctx, m as u32)?;
            let omega = mu.restrict_e1(&ctx, m as u32)?.mul(&chi.lift(&ctx, m as u32)?)?;
            let mut bad = 0;
            for &z in &zs {
                for uu in [(1 + pm as u64, 0u64), (1, pm as u64), (1, 0)] {
                    let zu = ExtNumber::from_residue(p, ctx.prec, ctx.omega, 0, z).mul(&ExtNumber::from_residue(p, ctx.prec, ctx.omega, 0, uu));
                    let w = r.act_t(&zu, &v)?.eval_e(&ctx.e(1, 0))?;
                    if w != omega.eval(ctx.galois_ring(m as u32).reduce(z)) {
                        bad += 1;
                    }
                }
            }
            rep.push(Case::check(format!("{tag} W(t(zu)) = ω(z) on E¹(1+P_E^m)"), "ω(z)", format!("{bad} of {} differ", 3 * zs.len()), bad == 0));
        }
    }
    Ok(rep)
}

/// A generator of `J_m`, applied through its own formula rather than a
/// Bruhat decomposition.
enum Gen {
    N(Padic),
    T(Padic, Padic),
    Nbar(Padic),
}

pub fn theta(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("theta", "closed forms of θ(t(a)w) against direct evaluation in the Weil representation", cfg);
    let m = cfg.m_max;
    let p = ctx.p;
    let phi = make_phi_m(&ctx, m)?;
    let chars = f_chars(&ctx, m as u32)?;
    let mut jobs = Vec::new();
    for kernel in [WKernel::Derived, WKernel::Displayed] {
        for chi in &chars {
            jobs.push((kernel, chi.clone()));
        }
    }
    let s = cfg.max_shell.min(4);
    rep.cases.extend(par_cases(&jobs, |(kernel, chi)| {
        let r = WeilGl2::new(-1, *kernel, chi.clone());
        let mut out = Vec::new();
        for v in -s..=2 {
            for u in units_f(p, 2) {
                let a = Padic::new(p, ctx.prec, v, u as i64);
                let id = format!("GL2 {kernel:?} chi={} a=p^{v}·{u}", chi.id());
                let c = r.whittaker_torus_w(&ctx, &phi, &a).and_then(|d| Ok(Case::cyc(id.clone(), &theta_torus_w_gl2(&ctx, *kernel, m, chi, &a)?, &d)));
                out.push(or_fail(id, "closed form", c));
            }
        }
        out
    }));
    let g = NormOneGroup::new(&ctx, m as u32)?;
    let nchars = enumerate_norm_one_chars(&g, m as u32);
    let ring = ctx.galois_ring(2);
    let units = ring.units();
    rep.cases.extend(par_cases(&nchars, |chi| {
        let mut out = Vec::new();
        let r = WeilU11::new(mu0(&ctx).expect("μ"), -1, chi.clone());
        let prepared = make_phi_m_chi(&ctx, m as u32, chi).and_then(|f| r.act_w(&f));
        let fw = match prepared {
            Ok(f) => f,
            Err(e) => return vec![Case::failed(format!("U11 chi={}", chi.k), "closed form", &e)],
        };
        for v in -m..=1 {
            for &u in &units {
                let a = ExtNumber::from_residue(p, ctx.prec, ctx.omega, v, u);
                let id = format!("U11 chi={} a=p^{v}·{u:?}", chi.k);
                let c = (|| -> Result<Case> {
                    let f = r.act_t(&a, &fw)?;
                    let direct = GammaCyc { value: f.eval_e(&ctx.e(1, 0))?, gamma: f.gamma };
                    let closed = theta_torus_w_u11(&ctx, &r.mu, chi, m as u32, &a, Orientation::Psi)?;
                    Ok(Case::check(
                        id.clone(),
                        format!("{} γ^{}", closed.value, closed.gamma),
                        format!("{} γ^{}", direct.value, direct.gamma),
                        direct.same(&closed),
                    ))
                })();
                out.push(or_fail(id, "closed form", c));
            }
        }
        out
    }));
    Ok(rep)
}

pub fn sections(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("sections", "flat sections at n̄(x) and w n(x) for Φ_{i,l} against their closed forms", cfg);
    let p = ctx.p;
    let mut xs = vec![Padic::zero(p, ctx.prec)];
    for v in -4..=7 {
        for u in [1i64, 2] {
            xs.push(Padic::new(p, ctx.prec, v, u));
        }
    }
    let mut jobs = Vec::new();
    for i in 1..=cfg.max_shell.min(6) {
        for l in 1..=2 {
            jobs.push((i, l));
        }
    }
    rep.cases.extend(par_cases(&jobs, |&(i, l)| {
        let run = || -> Result<Vec<Case>> {
            let mut out = Vec::new();
            let phi = make_phi_il(&ctx, i, l)?;
            let phih = phi.fourier2(None)?;
            let fch = f_chars(&ctx, l as u32)?;
            let e1 = fch.iter().find(|c| c.degree as i32 == l).cloned().unwrap_or_else(|| fch[0].clone());
            let e2 = fch[0].with_at_p(Cyc::from_int(-1))?;
            let xi = e1.mul_char(&ctx, &e2.inverse()?)?;
            let eg = UnitGroup::new(&ctx, Side::E, l as u32)?;
            let ech = enumerate_chars(&eg, l as u32, &Cyc::from_int(2))?;
            let eta = ech.iter().find(|c| c.degree as i32 == l).cloned().unwrap_or_else(|| ech[0].clone());
            let star = eta.conj_inverse(&ctx)?;
            let xi_e = eta.restrict_f(&ctx)?;
            for x in &xs {
                let tag = format!("i={i} l={l} x=p^{}·{}", x.v, x.u);
                let a = flat_section_gl2(&ctx, &gl2_nbar(x), &phi, &e1, &e2)?;
                out.push(Case::rational(format!("GL2 n̄ {tag}"), &section_nbar_closed(&ctx, SVar::gl2(&ctx), i, l, x), &a));
                let b = flat_section_gl2(&ctx, &gl2_w(&ctx).mul(&gl2_n(x)), &phih, &e2, &e1)?.dualize();
                out.push(Case::rational(format!("GL2 wn {tag}"), &section_wn_closed(&ctx, SVar::gl2(&ctx), i, l, &xi, x)?, &b));
                let a = flat_section_u11(&ctx, &u11_nbar(&ctx, x), &phi, &eta)?;
                out.push(Case::rational(format!("U11 n̄ {tag}"), &section_nbar_closed(&ctx, SVar::u11(&ctx), i, l, x), &a));
                let b = flat_section_u11(&ctx, &u11_w(&ctx).mul(&u11_n(&ctx, x)), &phih, &star)?.dualize();
                out.push(Case::rational(format!("U11 wn {tag}"), &section_wn_closed(&ctx, SVar::u11(&ctx), i, l, &xi_e, x)?, &b));
            }
            Ok(out)
        };
        run().unwrap_or_else(|e| vec![Case::failed(format!("i={i} l={l}"), "section values", &e)])
    }));
    Ok(rep)
}

fn nu_grid() -> Vec<Cyc> {
    vec![Cyc::from_int(2), Cyc::from_ratio(1, 5), Cyc::root(8, 1)]
}

fn eta_grid() -> Vec<Cyc> {
    vec![Cyc::one(), Cyc::from_int(3), Cyc::root(6, 1)]
}

pub fn unram_zeta(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("unram-zeta", "unramified U(1,1) zeta integral = c·L_E(s, μην)L_E(s, μην^{-1}), ε = 1", cfg);
    let mu = mu0(&ctx)?;
    for nu in nu_grid() {
        for t in eta_grid() {
            let eta = MultChar::unramified(&ctx, Side::E, t.clone())?;
            let tag = format!("ν={nu} η(p)={t}");
            let z = unram_zeta_u11(&ctx, &nu, &mu, &eta, cfg.order)?;
            rep.push(Case::rational(format!("{tag} Ψ"), &z.closed, &z.direct));
            let coeffs = z.direct_series == z.closed_series;
            rep.push(Case::check(format!("{tag} coefficients to X^{}", cfg.order), "equal", if coeffs { "equal" } else { "differ" }, coeffs));
            let g = gamma_from_fe_u11_unram(&ctx, &nu, &mu, &eta)?;
            rep.push(Case::rational(format!("{tag} ε"), &LaurentRational::one(ctx.p * ctx.p), &g.epsilon));
            rep.push(Case::rational(format!("{tag} γ against L-ratio"), &g.from_l_ratio.value, &g.gamma.value));
        }
    }
    let (_, ok) = unram_zeta_u11_symbolic(&ctx, &mu, cfg.order)?;
    rep.push(Case::check(format!("symbolic ν, η(p): Ψ·(1+ηνX)(1+ην^-1X) = c + O(X^{})", cfg.order + 1), "identity", if ok { "identity" } else { "fails" }, ok));
    rep.notes.push(format!("c = {}", crate::zeta::unram_constant(&ctx)));
    Ok(rep)
}

pub fn tate_gamma(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("tate-gamma", "Tate γ-factor independent of the test function; monomial for ramified η", cfg);
    let mut chars = Vec::new();
    for c in f_chars(&ctx, cfg.max_degree.min(2))? {
        for t in [Cyc::one(), Cyc::from_int(-1), Cyc::from_int(2)] {
            chars.push(c.with_at_p(t)?);
        }
    }
    rep.cases.extend(par_cases(&chars, |eta| {
        let id = format!("η={} deg={}", eta.id(), eta.degree);
        let mut out = Vec::new();
        match tate_gamma_fn(&ctx, eta) {
            Ok(g) => {
                out.push(Case::check(format!("{id} probes"), "≥ 3 agreeing", g.probes.join(" "), g.probes.len() >= 3));
                if eta.degree > 0 {
                    let mono = g.value.as_monomial();
                    out.push(Case::check(
                        format!("{id} monomial"),
                        format!("c·X^{}", eta.degree),
                        g.value.to_string(),
                        mono.is_some_and(|(_, k)| k == eta.degree as i32),
                    ));
                } else {
                    let t = eta.at_p.clone();
                    let num = LPoly::constant(Cyc::one()).sub(&LPoly::monomial(t.clone(), 1));
                    let den = LPoly::constant(Cyc::one()).sub(&LPoly::monomial(t.inv().expect("nonzero").mul(&qc(ctx.p, -1)), -1));
                    let want = LaurentRational::from_poly(ctx.p, num).div(&LaurentRational::from_poly(ctx.p, den)).expect("nonzero");
                    out.push(Case::rational(format!("{id} unramified closed form"), &want, &g.value));
                }
            }
            Err(e) => out.push(Case::failed(id, "γ", &e)),
        }
        out
    }));
    Ok(rep)
}

fn alpha_grid() -> Vec<(Cyc, Cyc)> {
    vec![
        (Cyc::from_int(2), Cyc::from_ratio(1, 5)),
        (Cyc::from_int(-3), Cyc::from_int(7)),
        (Cyc::root(4, 1), Cyc::from_ratio(2, 3)),
    ]
}

pub fn gamma_mult(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("gamma-mult", "γ from the GL₂ functional equation = product of four Tate γ-factors", cfg);
    let mut jobs = Vec::new();
    for a in alpha_grid() {
        for chi_p in [Cyc::one(), Cyc::from_int(-1), Cyc::from_int(7)] {
            for e in [Cyc::one(), Cyc::from_int(3), Cyc::from_ratio(-1, 2)] {
                jobs.push((a.clone(), chi_p.clone(), e));
            }
        }
    }
    rep.cases.extend(par_cases(&jobs, |(a, chi_p, e)| {
        let id = format!("α=({}, {}) χ(p)={chi_p} η₁(p)={e}", a.0, a.1);
        let run = || -> Result<Case> {
            let chi = MultChar::unramified(&ctx, Side::F, chi_p.clone())?;
            let eta1 = MultChar::unramified(&ctx, Side::F, e.clone())?;
            let fe = gamma_from_fe_gl2(&ctx, a, &chi, &eta1)?;
            let mult = gamma_mult_fn(&ctx, a, &chi, &eta1)?;
            let mut c = Case::rational(id.clone(), &mult.value, &fe.value);
            c.exact_match &= fe.provenance == Provenance::DirectFe && mult.provenance == Provenance::Multiplicativity;
            Ok(c)
        };
        vec![or_fail(id.clone(), "equal", run())]
    }));
    let bad = MultChar::unramified(&ctx, Side::F, qc(ctx.p, -1))?;
    rep.push(Case::rejects("χ = |·| rejected", gamma_mult_fn(&ctx, &alpha_grid()[0], &bad, &MultChar::trivial(&ctx, Side::F)?)));
    Ok(rep)
}

pub fn howe_zeta(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("howe-zeta", "cell zeta integrals of Howe data equal q^{-l-i}·vol constants", cfg);
    let triv = MultChar::trivial(&ctx, Side::F)?;
    let mut jobs: Vec<(char, i32, i32, i32, usize)> = Vec::new();
    for m in 1..=cfg.m_max {
        for i in [3 * m, 3 * m + 1] {
            for which in 0..2 {
                jobs.push(('G', m, i, 0, which));
                jobs.push(('U', m, i, 0, which));
            }
        }
    }
    jobs.push(('G', 1, 3, 1, 0));
    jobs.push(('U', 1, 3, 1, 0));
    rep.cases.extend(par_cases(&jobs, |&(grp, m, i, extra, which)| {
        let run = || -> Result<Case> {
            let z = if grp == 'G' {
                let chis = f_chars(&ctx, m as u32)?;
                let chi = if which == 0 { triv.clone() } else { chis.iter().find(|c| c.degree as i32 == m).cloned().unwrap_or(triv.clone()) };
                let eta1 = if which == 0 { triv.clone() } else { f_chars(&ctx, 1)?.into_iter().find(|c| c.degree == 1).unwrap_or(triv.clone()) };
                howe_zeta_gl2(&ctx, m, i, &chi, &eta1, extra)?
            } else {
                let g = NormOneGroup::new(&ctx, m as u32)?;
                let cs = enumerate_norm_one_chars(&g, m as u32);
                let chi = if which == 0 { cs[0].clone() } else { cs.iter().find(|c| c.degree as i32 == m).cloned().unwrap_or(cs[0].clone()) };
                howe_zeta_u11(&ctx, m, i, &chi, extra)?
            };
            let id = format!("{} m={m} i={i} l={} mesh+{extra} η={:?}", if grp == 'G' { "GL2" } else { "U11" }, z.l, z.eta);
            Ok(Case::rational(id, &LaurentRational::from_cyc(z.value.base, z.expected.clone()), &z.value))
        };
        vec![or_fail(format!("{grp} m={m} i={i} mesh+{extra} variant {which}"), "constant", run())]
    }));
    Ok(rep)
}

pub fn transform(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("transform", "γ under change of additive character: shift and κ composition laws", cfg);
    let p = ctx.p;
    let pa = |v: i32, u: i64| Padic::new(p, ctx.prec, v, u);
    let eg = UnitGroup::new(&ctx, Side::E, 2)?;
    let etas = enumerate_chars(&eg, 2, &Cyc::from_int(3))?;
    let kappa = (1..p as i64).map(|u| pa(1, u)).next().expect("κ");
    for (n, eta) in etas.iter().enumerate().step_by((etas.len() / 6).max(1)) {
        let g = GammaFactor { value: LaurentRational::geometric(p * p, Cyc::from_int(2), 1), provenance: Provenance::DirectFe, params: String::new() };
        for (b, b2) in [(pa(1, 2), pa(-2, 5)), (pa(0, 4), pa(3, 1)), (pa(-1, 7), pa(-1, 2))] {
            let one = gamma_transform(&ctx, &gamma_transform(&ctx, &g, eta, &PsiRule::ShiftB(b))?, eta, &PsiRule::ShiftB(b2))?;
            let two = gamma_transform(&ctx, &g, eta, &PsiRule::ShiftB(b.mul(&b2)))?;
            rep.push(Case::rational(format!("η#{n} shift b={}p^{} then {}p^{}", b.u, b.v, b2.u, b2.v), &two.value, &one.value));
        }
        let kk = gamma_transform(&ctx, &gamma_transform(&ctx, &g, eta, &PsiRule::Kappa(kappa))?, eta, &PsiRule::Kappa(kappa))?;
        let ns = gamma_transform(&ctx, &g, eta, &PsiRule::NormShift(ExtNumber::from_f(&kappa, ctx.omega)))?;
        rep.push(Case::rational(format!("η#{n} κ twice = norm shift by κ"), &ns.value, &kk.value));
        let mono = kk.value.div(&g.value)?.as_monomial().is_some();
        rep.push(Case::check(format!("η#{n} ratio is a monomial"), "monomial", if mono { "monomial" } else { "not monomial" }, mono));
    }
    rep.push(Case::rejects("κ a norm is rejected", gamma_transform(
        &ctx,
        &GammaFactor { value: LaurentRational::one(p * p), provenance: Provenance::DirectFe, params: String::new() },
        &etas[0],
        &PsiRule::Kappa(pa(2, 1)),
    )));
    Ok(rep)
}

pub fn stability(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    let mut rep = Report::new("stability", "nonvanishing characters for θ(t(a)w) and the stability radius max(deg χ, N)", cfg);
    let m = cfg.m_max;
    let mut s = NonvanishingSearch::new(WKernel::Derived, m);
    for v in -(2 * m)..=1 {
        for u in units_f(ctx.p, 1).into_iter().chain([ctx.p as u64 + 1]) {
            let a = Padic::new(ctx.p, ctx.prec, v, u as i64);
            let id = format!("a=p^{v}·{u} nonvanishing χ");
            rep.push(match s.find(&ctx, &a) {
                Ok((chi, val)) => Case::check(id, format!("deg ≤ {}", (-v).max(1)), format!("deg {} value {val}", chi.degree), chi.degree as i32 <= (-v).max(1)),
                Err(e) => Case::failed(id, "some χ", &e),
            });
        }
    }
    for chi in f_chars(&ctx, 2)?.into_iter().step_by(2) {
        for big_n in 1..=m {
            let id = format!("χ={} N={big_n} radius", chi.id());
            let want = (chi.degree as i32).max(big_n).max(1) as u32;
            rep.push(match stability_radius(&ctx, WKernel::Derived, &chi, big_n, m, want) {
                Ok(d) => Case::check(id, want.to_string(), d.to_string(), d == want),
                Err(e) => Case::failed(id, want.to_string(), &e),
            });
        }
    }
    // below the radius in the degree, something moves
    if m >= 2 && cfg.precision >= 6 {
        let g = UnitGroup::new(&ctx, Side::F, 3)?;
        if let Some(chi3) = enumerate_chars(&g, 3, &Cyc::one())?.into_iter().find(|x| x.degree == 3) {
            let viol = stability_violation(&ctx, WKernel::Derived, &chi3, 1, 3, 2, 1)?;
            rep.push(Case::check("deg 3 χ, m = 3, d = 2 is too small", "violation", format!("{viol:?}"), viol.is_some()));
        }
    }
    Ok(rep)
}

/// The one-off subcommands, reported in the same format as the suites.
pub fn single(cmd: &Command, cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.context()?;
    match cmd {
        Command::TateGamma { degree, at_p } => {
            let t = parse_rational(at_p)?;
            let mut rep = Report::new("tate-gamma-values", "Tate γ-factors", cfg);
            for c in f_chars(&ctx, *degree)?.into_iter().filter(|c| c.degree == *degree) {
                let eta = c.with_at_p(t.clone())?;
                let g = tate_gamma_fn(&ctx, &eta)?;
                rep.push(Case::check(eta.id(), "γ", g.value.to_string(), g.probes.len() >= 3));
            }
            Ok(rep)
        }
        Command::UnramZeta { nu, eta_p } => {
            let nu = parse_rational(nu)?;
            let eta = MultChar::unramified(&ctx, Side::E, parse_rational(eta_p)?)?;
            let z = unram_zeta_u11(&ctx, &nu, &mu0(&ctx)?, &eta, cfg.order)?;
            let mut rep = Report::new("unram-zeta-value", "unramified U(1,1) zeta integral", cfg);
            rep.push(Case::rational(format!("ν={nu} η(p)={}", eta.at_p), &z.closed, &z.direct));
            rep.notes.push(format!("c = {}", z.constant));
            Ok(rep)
        }
        Command::GammaMultCheck { alpha1, alpha2, chi_p, eta1_p } => {
            let a = (parse_rational(alpha1)?, parse_rational(alpha2)?);
            let chi = MultChar::unramified(&ctx, Side::F, parse_rational(chi_p)?)?;
            let eta1 = MultChar::unramified(&ctx, Side::F, parse_rational(eta1_p)?)?;
            let fe = gamma_from_fe_gl2(&ctx, &a, &chi, &eta1)?;
            let mult = gamma_mult_fn(&ctx, &a, &chi, &eta1)?;
            let mut rep = Report::new("gamma-mult-value", "functional-equation γ against the Tate product", cfg);
            rep.push(Case::rational(fe.params.clone(), &mult.value, &fe.value));
            Ok(rep)
        }
        Command::SectionValues { i, l, xv, xu } => {
            let x = if *xu == 0 { Padic::zero(ctx.p, ctx.prec) } else { Padic::new(ctx.p, ctx.prec, *xv, *xu) };
            let phi = make_phi_il(&ctx, *i, *l)?;
            let eta = MultChar::trivial(&ctx, Side::E)?;
            let mut rep = Report::new("section-values", "flat sections of Φ_{i,l}", cfg);
            let a = flat_section_u11(&ctx, &u11_nbar(&ctx, &x), &phi, &eta)?;
            rep.push(Case::rational("U11 n̄(x)", &section_nbar_closed(&ctx, SVar::u11(&ctx), *i, *l, &x), &a));
            let b = flat_section_u11(&ctx, &u11_w(&ctx).mul(&u11_n(&ctx, &x)), &phi.fourier2(None)?, &eta)?.dualize();
            rep.push(Case::rational("U11 w n(x)", &section_wn_closed(&ctx, SVar::u11(&ctx), *i, *l, &eta.restrict_f(&ctx)?, &x)?, &b));
            Ok(rep)
        }
        Command::HoweZeta { group, m, i } => {
            let i = i.unwrap_or(3 * m);
            let z = match group {
                Group::Gl2 => {
                    let t = MultChar::trivial(&ctx, Side::F)?;
                    howe_zeta_gl2(&ctx, *m, i, &t, &t, 0)?
                }
                Group::U11 => howe_zeta_u11(&ctx, *m, i, &NormOneChar::trivial(NormOneGroup::new(&ctx, 1)?), 0)?,
            };
            let mut rep = Report::new("howe-zeta-value", "cell zeta integral of Howe data", cfg);
            rep.push(Case::rational(format!("{group:?} m={m} i={i}"), &LaurentRational::from_cyc(z.value.base, z.expected.clone()), &z.value));
            Ok(rep)
        }
        Command::RunSuite { .. } => Err(Error::Invalid("run-suite is handled by the driver".into())),
    }
}

