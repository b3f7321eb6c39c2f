//! The abstract search-and-retrieve mission as a four-module
//! guarded-command model: UAV mode logic, time/battery/actuator,
//! lawnmower movement over the grid, and object status.
//!
//! Modes of the UAV module (`s1`): 1 take-off, 2 initialise, 3 search,
//! 4 identify and hover, 6 grasp, 7 transport, 8 reacquire, 10 release,
//! 11 return to search, 12 return to base, 13 landed, 14 done,
//! 15 system-fault landing.
//!
//! Object status (`o1`, `o2`, ...): 0 unseen, 1 spotted, 2 carried,
//! 3 deposited, 4 lost. `loc` is where the UAV is relative to the grid:
//! 0 above the search position, 1 at the depot, 2 at the base.

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::expr::{all, any, call, ident, int, ite, not, real, Expr, Func};
use crate::model::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbstractScenario {
    /// Grid extents in cells along x and y.
    pub xcoord: i64,
    pub ycoord: i64,
    /// Object cells.
    pub objects: Vec<[i64; 2]>,
    pub base: [i64; 2],
    pub depot: [i64; 2],
    /// Battery capacity and low threshold, in seconds of flight.
    pub battery_capacity: i64,
    pub battery_low: i64,
    /// Battery depletion per second of flight.
    pub db: i64,
    /// Ground recharge rate, battery units per second.
    pub charge_rate: i64,
    /// Mission time horizon, seconds.
    pub miss: i64,
    /// Actuator fault probability per second of flight.
    pub pf: f64,
    /// System fault probability at initialisation.
    pub ps: f64,
    /// Probability of dropping a carried object during one transport.
    pub pg: f64,
    /// Lower and upper detection probability when passing over an object.
    pub pd: [f64; 2],
    /// Grab/release time bounds, seconds.
    pub tgl: i64,
    pub tgu: i64,
    /// Seconds per search cell.
    pub dt: i64,
    /// Seconds of travel per cell of straight-line distance.
    pub move_time: f64,
    pub takeoff: i64,
    /// Lower and upper identify-hover-descend time.
    pub hover: [i64; 2],
    /// Fixed part of transport (ascend, descend), travel added.
    pub transport: i64,
    /// Fixed part of return to search, travel added.
    pub return_search: i64,
    /// Fixed part of return to base including landing, travel added.
    pub return_base: i64,
    /// Landing after a system fault.
    pub system_land: i64,
    /// Ground time on every landing before recharge.
    pub idle: i64,
    /// Duration of an emergency landing.
    pub emergency: i64,
}

impl Default for AbstractScenario {
    /// 8×14 grid of half-metre cells over the arena, one second per cell.
    fn default() -> Self {
        Self {
            xcoord: 8,
            ycoord: 14,
            objects: vec![[3, 5], [5, 10]],
            base: [0, 0],
            depot: [6, 4],
            battery_capacity: 100,
            battery_low: 0,
            db: 1,
            charge_rate: 5,
            miss: 300,
            pf: 0.00018,
            ps: 0.05,
            pg: 0.008,
            pd: [0.9, 1.0],
            tgl: 0,
            tgu: 1,
            dt: 1,
            move_time: 0.5,
            takeoff: 3,
            hover: [15, 15],
            transport: 6,
            return_search: 1,
            return_base: 4,
            system_land: 3,
            idle: 5,
            emergency: 3,
        }
    }
}

fn in_grid(sc: &AbstractScenario, c: [i64; 2]) -> bool {
    (0..sc.xcoord).contains(&c[0]) && (0..sc.ycoord).contains(&c[1])
}

fn prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl AbstractScenario {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let err = |m: String| Err(VerifyError::Scenario(m));
        if self.xcoord < 1 || self.ycoord < 1 {
            return err(format!("grid {}x{} is empty", self.xcoord, self.ycoord));
        }
        for (k, o) in self.objects.iter().enumerate() {
            if !in_grid(self, *o) {
                return err(format!("object {} at {o:?} is outside the grid", k + 1));
            }
            if self.objects[..k].contains(o) {
                return err(format!("objects share cell {o:?}"));
            }
        }
        if !in_grid(self, self.base) || !in_grid(self, self.depot) {
            return err("base and depot must be inside the grid".into());
        }
        if !(0.0..1.0).contains(&self.pf) {
            return err(format!("pf = {} outside [0, 1)", self.pf));
        }
        if !prob(self.ps) || !prob(self.pg) || !prob(self.pd[0]) || !prob(self.pd[1]) || self.pd[0] > self.pd[1] {
            return err("ps, pg and pd must be probabilities with pd[0] <= pd[1]".into());
        }
        if self.tgl < 0 || self.tgl > self.tgu {
            return err(format!("need 0 <= Tgl <= Tgu, got {} and {}", self.tgl, self.tgu));
        }
        if self.hover[0] < 0 || self.hover[0] > self.hover[1] {
            return err(format!("bad hover interval {:?}", self.hover));
        }
        let durations = [
            self.dt,
            self.takeoff,
            self.transport,
            self.return_search,
            self.return_base,
            self.system_land,
            self.idle,
            self.emergency,
        ];
        if self.dt < 1 || durations.iter().any(|d| *d < 0) || !(self.move_time >= 0.0) {
            return err("durations must be non-negative and the search step at least 1 s".into());
        }
        if self.db < 0 || self.charge_rate < 1 || self.battery_low < 0 || self.battery_low >= self.battery_capacity {
            return err("need db >= 0, charge rate >= 1 and 0 <= Blow < Bcap".into());
        }
        if self.miss <= self.max_step() {
            return err(format!("horizon {} shorter than the longest step {}", self.miss, self.max_step()));
        }
        Ok(())
    }

    fn travel_bound(&self) -> i64 {
        let d = ((self.xcoord - 1).pow(2) + (self.ycoord - 1).pow(2)) as f64;
        (d.sqrt() * self.move_time).ceil() as i64
    }

    /// Longest duration of any single transition.
    pub fn max_step(&self) -> i64 {
        let travel = self.travel_bound();
        let recharge = (self.battery_capacity + self.charge_rate - 1) / self.charge_rate;
        [
            self.dt,
            self.takeoff,
            self.hover[1],
            self.tgu,
            self.transport + travel,
            self.return_search + travel,
            self.return_base + travel,
            self.system_land,
            self.idle + recharge,
        ]
        .into_iter()
        .max()
        .unwrap()
    }

    /// Cells of the lawnmower path in visiting order.
    pub fn search_path(&self) -> Vec<[i64; 2]> {
        let mut out = Vec::new();
        for y in 0..self.ycoord {
            let xs: Vec<i64> = if y % 2 == 0 { (0..self.xcoord).collect() } else { (0..self.xcoord).rev().collect() };
            out.extend(xs.into_iter().map(|x| [x, y]));
        }
        out
    }

    pub fn with_objects(&self, objects: Vec<[i64; 2]>) -> Self {
        Self { objects, ..self.clone() }
    }

    /// The guarded-command model of this scenario.
    pub fn to_model(&self) -> Result<GuardedCommandModel, VerifyError> {
        self.validate()?;
        Ok(Builder { sc: self }.model())
    }
}

struct Builder<'a> {
    sc: &'a AbstractScenario,
}

fn v(s: &str) -> Expr {
    ident(s)
}

fn cmd(action: Option<&str>, guard: Expr, updates: Vec<Update>) -> Command {
    Command::new(action, guard, updates)
}

fn go(assignments: Vec<(&str, Expr)>) -> Vec<Update> {
    vec![Update::certain(assignments)]
}

fn s1_is(m: i64) -> Expr {
    v("s1").eq(int(m))
}

fn at(x: Expr, y: Expr) -> Expr {
    v("posx").eq(x).and(v("posy").eq(y))
}

/// Travel seconds between two cells.
fn travel(ax: Expr, ay: Expr, bx: Expr, by: Expr) -> Expr {
    let dx = ax.sub(bx);
    let dy = ay.sub(by);
    let d2 = dx.clone().mul(dx).add(dy.clone().mul(dy));
    call(Func::Ceil, vec![call(Func::Pow, vec![d2, real(0.5)]).mul(v("move"))])
}

const LOWB_MODES: [i64; 6] = [3, 4, 6, 7, 10, 11];

impl Builder<'_> {
    fn n(&self) -> usize {
        self.sc.objects.len()
    }

    fn o(k: usize) -> String {
        format!("o{}", k + 1)
    }

    fn obj_at(k: usize) -> Expr {
        at(v(&format!("Objx{}", k + 1)), v(&format!("Objy{}", k + 1)))
    }

    fn constants(&self) -> Vec<Constant> {
        let sc = self.sc;
        let i = |name: &str, x: i64| Constant { name: name.into(), ty: ConstType::Int, value: int(x) };
        let d = |name: &str, x: f64| Constant { name: name.into(), ty: ConstType::Double, value: real(x) };
        let last = *sc.search_path().last().unwrap();
        let mut c = vec![
            i("Xcoord", sc.xcoord - 1),
            i("Ycoord", sc.ycoord - 1),
            i("lastX", last[0]),
            i("lastY", last[1]),
            i("baseX", sc.base[0]),
            i("baseY", sc.base[1]),
            i("depotX", sc.depot[0]),
            i("depotY", sc.depot[1]),
        ];
        for (k, o) in sc.objects.iter().enumerate() {
            c.push(i(&format!("Objx{}", k + 1), o[0]));
            c.push(i(&format!("Objy{}", k + 1), o[1]));
        }
        c.extend([
            i("Bcap", sc.battery_capacity),
            i("Blow", sc.battery_low),
            i("db", sc.db),
            i("rate", sc.charge_rate),
            i("Miss", sc.miss),
            i("MaxStep", sc.max_step()),
            d("pf", sc.pf),
            d("ps", sc.ps),
            d("pg", sc.pg),
            d("pdl", sc.pd[0]),
            d("pdu", sc.pd[1]),
            i("Tgl", sc.tgl),
            i("Tgu", sc.tgu),
            i("dt", sc.dt),
            d("move", sc.move_time),
            i("Ttko", sc.takeoff),
            i("Thovl", sc.hover[0]),
            i("Thovu", sc.hover[1]),
            i("Ttrn", sc.transport),
            i("Trts", sc.return_search),
            i("Trtb", sc.return_base),
            i("Tland", sc.system_land),
            i("Tidle", sc.idle),
            i("Temg", sc.emergency),
        ]);
        c
    }

    fn formulas(&self) -> Vec<Formula> {
        let f = |name: &str, expr: Expr| Formula { name: name.into(), expr };
        let n = self.n();
        let here = |k: usize, status: i64| Self::obj_at(k).and(v(&Self::o(k)).eq(int(status)));
        let pos = |x: &str, y: &str| (v(x), v(y));
        let from_loc = |to: (Expr, Expr)| {
            let (bx, by) = pos("baseX", "baseY");
            let (dx, dy) = pos("depotX", "depotY");
            ite(
                v("loc").eq(int(1)),
                travel(dx, dy, to.0.clone(), to.1.clone()),
                ite(
                    v("loc").eq(int(2)),
                    travel(bx, by, to.0.clone(), to.1.clone()),
                    travel(v("posx"), v("posy"), to.0, to.1),
                ),
            )
        };
        vec![
            f(
                "NoOfObjs",
                (0..n).map(|k| ite(v(&Self::o(k)).ne(int(3)), int(1), int(0))).reduce(Expr::add).unwrap_or(int(0)),
            ),
            f("FOUND", any((0..n).map(|k| here(k, 1)))),
            f("PENDING", any((0..n).map(|k| here(k, 0)))),
            f("LAST", at(v("lastX"), v("lastY"))),
            f("DTRN", v("Ttrn").add(travel(v("posx"), v("posy"), v("depotX"), v("depotY")))),
            f("DRTS", v("Trts").add(from_loc((v("posx"), v("posy"))))),
            f("DRTB", v("Trtb").add(from_loc((v("baseX"), v("baseY"))))),
            f("DRCH", v("Tidle").add(call(Func::Ceil, vec![v("Bcap").sub(v("b")).div(v("rate"))]))),
        ]
    }

    fn uav(&self) -> Module {
        let vars = vec![
            Variable { name: "s1".into(), ty: VarType::Int { low: int(1), high: int(15) }, init: int(1) },
            Variable { name: "fail".into(), ty: VarType::Bool, init: Expr::Bool(false) },
            Variable { name: "loc".into(), ty: VarType::Int { low: int(0), high: int(2) }, init: int(2) },
        ];
        let fin = v("fail").or(v("NoOfObjs").eq(int(0)));
        let commands = vec![
            cmd(Some("tko"), s1_is(1), go(vec![("s1", int(2))])),
            cmd(
                Some("ini"),
                s1_is(2),
                vec![
                    Update::new(v("ps"), vec![("s1", int(15))]),
                    Update::new(int(1).sub(v("ps")), vec![("s1", int(11))]),
                ],
            ),
            cmd(Some("sysl"), s1_is(15), go(vec![("s1", int(13))])),
            cmd(Some("rts"), s1_is(11), go(vec![("s1", int(3)), ("loc", int(0))])),
            cmd(Some("srch"), all([s1_is(3), not(v("PENDING")), v("FOUND")]), go(vec![("s1", int(4))])),
            cmd(Some("srch"), all([s1_is(3), not(v("PENDING")), not(v("FOUND")), not(v("LAST"))]), go(vec![])),
            cmd(
                Some("srch"),
                all([s1_is(3), not(v("PENDING")), not(v("FOUND")), v("LAST")]),
                go(vec![("s1", int(12)), ("fail", Expr::Bool(true))]),
            ),
            cmd(Some("hov"), s1_is(4), go(vec![("s1", int(6))])),
            cmd(Some("grab"), s1_is(6), go(vec![("s1", int(7))])),
            cmd(
                Some("trn"),
                s1_is(7),
                vec![
                    Update::new(v("pg"), vec![("s1", int(8))]),
                    Update::new(int(1).sub(v("pg")), vec![("s1", int(10)), ("loc", int(1))]),
                ],
            ),
            cmd(Some("rcq"), s1_is(8), go(vec![("s1", int(3))])),
            cmd(Some("rel"), s1_is(10).and(v("NoOfObjs").gt(int(1))), go(vec![("s1", int(11))])),
            cmd(Some("rel"), s1_is(10).and(v("NoOfObjs").le(int(1))), go(vec![("s1", int(12))])),
            cmd(Some("rtb"), s1_is(12), go(vec![("s1", int(13)), ("loc", int(2))])),
            cmd(Some("fin"), s1_is(13).and(fin.clone()), go(vec![("s1", int(14))])),
            cmd(Some("rch"), s1_is(13).and(not(fin)), go(vec![("s1", int(1))])),
            cmd(
                Some("lowb"),
                all([v("c").eq(int(0)), v("b").le(v("Blow")), any(LOWB_MODES.map(s1_is))]),
                go(vec![("s1", int(12))]),
            ),
            cmd(Some("emg"), v("c").eq(int(1)).and(v("s1").ne(int(14))), go(vec![("s1", int(14))])),
            cmd(
                Some("tout"),
                all([v("c").eq(int(0)), v("s1").ne(int(14)), v("t").ge(v("Miss").sub(v("MaxStep")))]),
                go(vec![("s1", int(14))]),
            ),
            cmd(Some("end"), s1_is(14), go(vec![])),
        ];
        Module { name: "UAV".into(), vars, commands }
    }

    /// A step of `flight` seconds in the air followed by `ground` seconds
    /// on the ground; the actuator can only fail in flight.
    fn timed(action: &str, flight: Expr, ground: Option<Expr>, battery: bool) -> Command {
        let total = match &ground {
            Some(g) => flight.clone().add(g.clone()),
            None => flight.clone(),
        };
        let mut guard = vec![v("c").eq(int(0))];
        if battery {
            guard.push(v("b").gt(v("Blow")));
        }
        guard.push(v("t").add(total.clone()).lt(v("Miss")));
        let survive = call(Func::Pow, vec![int(1).sub(v("pf")), flight.clone()]);
        let b_next = call(Func::Max, vec![v("b").sub(v("db").mul(flight)), int(0)]);
        Command::new(
            Some(action),
            all(guard),
            vec![
                Update::new(survive.clone(), vec![("t", v("t").add(total)), ("b", b_next)]),
                Update::new(int(1).sub(survive), vec![("c", int(1))]),
            ],
        )
    }

    fn tba(&self) -> Module {
        let vars = vec![
            Variable { name: "t".into(), ty: VarType::Int { low: int(0), high: v("Miss") }, init: int(0) },
            Variable { name: "b".into(), ty: VarType::Int { low: int(0), high: v("Bcap") }, init: v("Bcap") },
            Variable { name: "c".into(), ty: VarType::Int { low: int(0), high: int(1) }, init: int(0) },
        ];
        let mut commands = vec![
            Self::timed("tko", v("Ttko"), None, true),
            Self::timed("srch", v("dt"), None, true),
            Self::timed("hov", v("Thovu"), None, true),
        ];
        if self.sc.hover[0] != self.sc.hover[1] {
            commands.push(Self::timed("hov", v("Thovl"), None, true));
        }
        commands.push(Self::timed("grab", v("Tgu"), None, true));
        if self.sc.tgl != self.sc.tgu {
            commands.push(Self::timed("grab", v("Tgl"), None, true));
        }
        commands.push(Self::timed("trn", v("DTRN"), None, true));
        commands.push(Self::timed("rel", v("Tgu"), None, true));
        if self.sc.tgl != self.sc.tgu {
            commands.push(Self::timed("rel", v("Tgl"), None, true));
        }
        commands.extend([
            Self::timed("rts", v("DRTS"), None, true),
            Self::timed("rtb", v("DRTB"), None, false),
            Self::timed("sysl", v("Tland"), None, false),
            Command::new(
                Some("rch"),
                v("c").eq(int(0)).and(v("t").add(v("DRCH")).lt(v("Miss"))),
                go(vec![("t", v("t").add(v("DRCH"))), ("b", v("Bcap"))]),
            ),
        ]);
        Module { name: "TBA".into(), vars, commands }
    }

    fn movement(&self) -> Module {
        let vars = vec![
            Variable { name: "posx".into(), ty: VarType::Int { low: int(0), high: v("Xcoord") }, init: int(0) },
            Variable { name: "posy".into(), ty: VarType::Int { low: int(0), high: v("Ycoord") }, init: int(0) },
        ];
        let even = call(Func::Mod, vec![v("posy"), int(2)]).eq(int(0));
        let odd = call(Func::Mod, vec![v("posy"), int(2)]).eq(int(1));
        let moving = not(v("FOUND")).and(not(v("LAST")));
        let step = |guard: Vec<Expr>, var: &str, delta: i64| {
            let mut g = guard;
            g.push(moving.clone());
            let next = if delta < 0 { v(var).sub(int(-delta)) } else { v(var).add(int(delta)) };
            cmd(Some("srch"), all(g), go(vec![(var, next)]))
        };
        let commands = vec![
            step(vec![v("posx").lt(v("Xcoord")), even.clone()], "posx", 1),
            step(vec![v("posx").eq(v("Xcoord")), even, v("posy").lt(v("Ycoord"))], "posy", 1),
            step(vec![v("posx").gt(int(0)), odd.clone()], "posx", -1),
            step(vec![v("posx").eq(int(0)), odd, v("posy").lt(v("Ycoord"))], "posy", 1),
            cmd(Some("srch"), v("FOUND").or(v("LAST")), go(vec![])),
        ];
        Module { name: "Movement".into(), vars, commands }
    }

    fn object(&self) -> Module {
        let n = self.n();
        let vars = (0..n)
            .map(|k| Variable { name: Self::o(k), ty: VarType::Int { low: int(0), high: int(4) }, init: int(0) })
            .collect();
        let mut commands = Vec::new();
        let ok = |k: usize| v(&Self::o(k));
        for k in 0..n {
            let seen = all([s1_is(3), Self::obj_at(k), ok(k).eq(int(0))]);
            let detect = |p: &str| {
                vec![
                    Update::new(v(p), vec![(&Self::o(k), int(1))]),
                    Update::new(int(1).sub(v(p)), vec![(&Self::o(k), int(4))]),
                ]
            };
            commands.push(cmd(None, seen.clone(), detect("pdu")));
            if self.sc.pd[0] != self.sc.pd[1] {
                commands.push(cmd(None, seen, detect("pdl")));
            }
        }
        for k in 0..n {
            commands.push(cmd(Some("grab"), Self::obj_at(k).and(ok(k).eq(int(1))), go(vec![(&Self::o(k), int(2))])));
            commands.push(cmd(Some("rel"), ok(k).eq(int(2)), go(vec![(&Self::o(k), int(3))])));
            commands.push(cmd(Some("rcq"), ok(k).eq(int(2)), go(vec![(&Self::o(k), int(0))])));
            commands.push(cmd(Some("rcq"), ok(k).eq(int(2)), go(vec![(&Self::o(k), int(4))])));
            commands.push(cmd(Some("lowb"), ok(k).eq(int(2)), go(vec![(&Self::o(k), int(0))])));
        }
        commands.push(cmd(Some("lowb"), all((0..n).map(|k| ok(k).ne(int(2)))), go(vec![])));
        Module { name: "Object".into(), vars, commands }
    }

    fn model(&self) -> GuardedCommandModel {
        let label = |name: &str, expr: Expr| Label { name: name.into(), expr };
        let item = |a: &str, value: Expr| RewardItem { action: Some(a.into()), guard: Expr::Bool(true), value };
        GuardedCommandModel {
            constants: self.constants(),
            formulas: self.formulas(),
            modules: vec![self.uav(), self.tba(), self.movement(), self.object()],
            labels: vec![
                label("done", s1_is(14)),
                label("fault", v("c").eq(int(1))),
                label("MissionSuccessful", all([s1_is(14), v("c").eq(int(0)), v("NoOfObjs").eq(int(0))])),
            ],
            rewards: vec![RewardStruct {
                name: "time".into(),
                items: vec![item("fin", v("t")), item("tout", v("t")), item("emg", v("t").add(v("Temg")))],
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::build;
    use crate::solve::{initial_probability, initial_reward, Opt, SolveOptions};

    fn small() -> AbstractScenario {
        AbstractScenario {
            xcoord: 3,
            ycoord: 3,
            objects: vec![[2, 1]],
            depot: [2, 2],
            battery_capacity: 30,
            miss: 120,
            hover: [2, 4],
            transport: 2,
            return_base: 2,
            idle: 1,
            move_time: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        let sc = AbstractScenario::default();
        sc.validate().unwrap();
        assert!(sc.with_objects(vec![[8, 0]]).validate().is_err());
        assert!(sc.with_objects(vec![[1, 1], [1, 1]]).validate().is_err());
        assert!(AbstractScenario { tgl: 2, tgu: 1, ..sc.clone() }.validate().is_err());
        assert!(AbstractScenario { pf: 1.0, ..sc.clone() }.validate().is_err());
        assert!(AbstractScenario { miss: 10, ..sc }.validate().is_err());
    }

    #[test]
    fn path_is_boustrophedon() {
        let sc = AbstractScenario { xcoord: 3, ycoord: 2, ..Default::default() };
        assert_eq!(sc.search_path(), vec![[0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]]);
    }

    #[test]
    fn degenerate_grid() {
        let sc = AbstractScenario { xcoord: 1, ycoord: 1, objects: vec![], depot: [0, 0], ..Default::default() };
        let m = build(&sc.to_model().unwrap()).unwrap();
        assert!(m.num_states() < 40, "{}", m.num_states());
        assert!(m.deadlocks.is_empty());
        let o = SolveOptions::default();
        let p = initial_probability(&m, "MissionSuccessful", Opt::Max, &o).unwrap();
        let f = initial_probability(&m, "fault", Opt::Min, &o).unwrap();
        assert!((p + f - 1.0).abs() < 1e-9 && f > 0.0 && f < 0.01, "{p} {f}");
    }

    #[test]
    fn no_fault_without_failure_rate() {
        let sc = AbstractScenario { pf: 0.0, ..small() };
        let m = build(&sc.to_model().unwrap()).unwrap();
        let o = SolveOptions::default();
        assert_eq!(initial_probability(&m, "fault", Opt::Min, &o).unwrap(), 0.0);
        assert_eq!(initial_probability(&m, "fault", Opt::Max, &o).unwrap(), 0.0);
    }

    #[test]
    fn every_path_finishes() {
        let m = build(&small().to_model().unwrap()).unwrap();
        assert!(m.deadlocks.is_empty());
        let o = SolveOptions::default();
        assert!((initial_probability(&m, "done", Opt::Min, &o).unwrap() - 1.0).abs() < 1e-9);
        let lo = initial_reward(&m, "time", "done", Opt::Min, &o).unwrap();
        let hi = initial_reward(&m, "time", "done", Opt::Max, &o).unwrap();
        assert!(lo.is_finite() && hi.is_finite() && lo < hi, "{lo} {hi}");
        let smin = initial_probability(&m, "MissionSuccessful", Opt::Min, &o).unwrap();
        let smax = initial_probability(&m, "MissionSuccessful", Opt::Max, &o).unwrap();
        assert!(smin < smax && smax < 1.0, "{smin} {smax}");
    }
}
