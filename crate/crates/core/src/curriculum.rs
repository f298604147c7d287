//! Curriculum tasks, curriculum graphs and a mastery-gated scheduler.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::config::{ConstraintConfig, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Add,
    Mul2,
    Mul3,
    Scoeff,
    Mixed,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Add, Task::Mul2, Task::Mul3, Task::Scoeff, Task::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Task::Add => "Add",
            Task::Mul2 => "Mul2",
            Task::Mul3 => "Mul3",
            Task::Scoeff => "Scoeff",
            Task::Mixed => "Mixed",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, CurriculumError> {
        Task::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or(CurriculumError::UnknownTask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CurriculumError {
    #[error("task is not part of this curriculum")]
    UnknownTask,
    #[error("accuracy must lie in [0, 1]")]
    AccuracyOutOfRange,
    #[error("curriculum graph has a cycle")]
    Cyclic,
    #[error("unknown curriculum")]
    UnknownCurriculum,
}

/// Limits for one curriculum task derived from the target config.
pub fn task_config(task: Task, base: &ConstraintConfig) -> ConstraintConfig {
    match task {
        Task::Add => ConstraintConfig { min_factors: 1, max_factors: 1, ..*base },
        Task::Mul2 => ConstraintConfig {
            min_products: 1,
            max_products: 1,
            min_factors: base.min_factors.min(2),
            max_factors: 2,
            ..*base
        },
        Task::Mul3 => ConstraintConfig {
            min_products: 1,
            max_products: 1,
            min_factors: base.min_factors.min(3),
            max_factors: 3,
            ..*base
        },
        Task::Scoeff => Preset::SmallCoeff.config(base.nvar),
        Task::Mixed => *base,
    }
}

/// Named curricula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurriculumName {
    C,
    C2,
    C4,
}

impl FromStr for CurriculumName {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, CurriculumError> {
        match s {
            "C" | "c" => Ok(CurriculumName::C),
            "C2" | "c2" => Ok(CurriculumName::C2),
            "C4" | "c4" => Ok(CurriculumName::C4),
            _ => Err(CurriculumError::UnknownCurriculum),
        }
    }
}

/// Tasks with "learn first" edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurriculumGraph {
    tasks: Vec<Task>,
    edges: Vec<(Task, Task)>,
    /// `ancestors[i]`: indices of every task that must be mastered before
    /// `tasks[i]`.
    ancestors: Vec<Vec<usize>>,
}

impl CurriculumGraph {
    pub fn new(edges: &[(Task, Task)]) -> Result<Self, CurriculumError> {
        let mut tasks: Vec<Task> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        tasks.sort_unstable();
        tasks.dedup();
        Self::with_tasks(tasks, edges)
    }

    pub fn single(task: Task) -> Self {
        Self::with_tasks(vec![task], &[]).expect("no edges")
    }

    fn with_tasks(tasks: Vec<Task>, edges: &[(Task, Task)]) -> Result<Self, CurriculumError> {
        let idx = |t: Task| tasks.iter().position(|&x| x == t).expect("edge endpoint listed");
        let n = tasks.len();
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in edges {
            parents[idx(b)].push(idx(a));
        }
        let mut ancestors = Vec::with_capacity(n);
        for i in 0..n {
            let mut seen = vec![false; n];
            let mut stack = parents[i].clone();
            while let Some(j) = stack.pop() {
                if j == i {
                    return Err(CurriculumError::Cyclic);
                }
                if !core::mem::replace(&mut seen[j], true) {
                    stack.extend(&parents[j]);
                }
            }
            ancestors.push((0..n).filter(|&j| seen[j]).collect());
        }
        Ok(CurriculumGraph { tasks, edges: edges.to_vec(), ancestors })
    }

    pub fn named(name: CurriculumName) -> Self {
        use Task::*;
        let edges: &[(Task, Task)] = match name {
            CurriculumName::C => &[(Add, Mul3), (Mul3, Mixed), (Add, Mixed)],
            CurriculumName::C2 => &[(Add, Mul2), (Mul2, Mul3), (Mul3, Mixed), (Add, Mixed)],
            CurriculumName::C4 => &[(Add, Mul2), (Mul2, Mul3), (Mul3, Scoeff), (Add, Scoeff), (Scoeff, Mixed)],
        };
        Self::new(edges).expect("named curricula are acyclic")
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[(Task, Task)] {
        &self.edges
    }

    pub fn index(&self, task: Task) -> Option<usize> {
        self.tasks.iter().position(|&t| t == task)
    }

    pub fn ancestors(&self, i: usize) -> &[usize] {
        &self.ancestors[i]
    }
}

/// Maps mastery rates to unnormalized attention.
pub trait AttentionProgram {
    fn attention(&self, graph: &CurriculumGraph, mastery: &[f64]) -> Vec<f64>;
}

/// A task is open once all its ancestors are mastered; open tasks get
/// attention `1 - mastery + floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatedRemainder {
    pub threshold: f64,
    pub floor: f64,
}

impl Default for GatedRemainder {
    fn default() -> Self {
        GatedRemainder { threshold: 0.9, floor: 0.05 }
    }
}

impl AttentionProgram for GatedRemainder {
    fn attention(&self, graph: &CurriculumGraph, mastery: &[f64]) -> Vec<f64> {
        (0..graph.tasks().len())
            .map(|i| {
                let open = graph.ancestors(i).iter().all(|&a| mastery[a] > self.threshold);
                if open { (1.0 - mastery[i]).max(0.0) + self.floor } else { 0.0 }
            })
            .collect()
    }
}

pub const DEFAULT_DECAY: f64 = 0.99;
pub const DEFAULT_GROUPS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerState {
    graph: CurriculumGraph,
    mastery: Vec<f64>,
    pub decay: f64,
    /// Batches drawn per scheduling round.
    pub groups: usize,
}

/// One batch of task labels; the caller generates the examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub tasks: Vec<Task>,
}

impl SchedulerState {
    pub fn new(graph: CurriculumGraph) -> Self {
        let n = graph.tasks().len();
        SchedulerState { graph, mastery: vec![0.0; n], decay: DEFAULT_DECAY, groups: DEFAULT_GROUPS }
    }

    pub fn graph(&self) -> &CurriculumGraph {
        &self.graph
    }

    pub fn mastery(&self) -> &[f64] {
        &self.mastery
    }

    pub fn mastery_of(&self, task: Task) -> Option<f64> {
        self.graph.index(task).map(|i| self.mastery[i])
    }

    /// Folds one batch accuracy into the task's moving average.
    pub fn update_mastery(&mut self, task: Task, accuracy: f64) -> Result<(), CurriculumError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(CurriculumError::AccuracyOutOfRange);
        }
        let i = self.graph.index(task).ok_or(CurriculumError::UnknownTask)?;
        self.mastery[i] = self.decay * self.mastery[i] + (1.0 - self.decay) * accuracy;
        Ok(())
    }

    /// Sampling probabilities over `graph().tasks()`.
    pub fn distribution(&self, program: &dyn AttentionProgram) -> Vec<f64> {
        let att = program.attention(&self.graph, &self.mastery);
        let total: f64 = att.iter().sum();
        if total <= 0.0 {
            let n = att.len() as f64;
            return vec![1.0 / n; att.len()];
        }
        att.iter().map(|a| a / total).collect()
    }

    /// `groups` batches of `batch_size` task labels drawn from the
    /// current distribution, shuffled across batches.
    pub fn sample_batches<R: Rng + ?Sized>(
        &self,
        program: &dyn AttentionProgram,
        batch_size: usize,
        rng: &mut R,
    ) -> Vec<Batch> {
        let dist = self.distribution(program);
        let tasks = self.graph.tasks();
        let mut labels: Vec<Task> = (0..self.groups * batch_size)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in dist.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return tasks[i];
                    }
                }
                // rounding left u above the last cumulative value
                let last = dist.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                tasks[last]
            })
            .collect();
        labels.shuffle(rng);
        labels
            .chunks(batch_size.max(1))
            .map(|c| Batch { tasks: c.to_vec() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::record_rng;

    #[test]
    fn task_configs() {
        let base = Preset::MediumCoeff.config(2);
        assert_eq!(task_config(Task::Mixed, &base), base);
        let add = task_config(Task::Add, &base);
        assert_eq!((add.min_factors, add.max_factors), (1, 1));
        let mul2 = task_config(Task::Mul2, &base);
        assert_eq!((mul2.min_products, mul2.max_products, mul2.max_factors), (1, 1, 2));
        assert_eq!(task_config(Task::Scoeff, &base), Preset::SmallCoeff.config(2));
        for t in Task::ALL {
            task_config(t, &base).validate().unwrap();
        }
    }

    #[test]
    fn graphs() {
        let c2 = CurriculumGraph::named(CurriculumName::C2);
        let mixed = c2.index(Task::Mixed).unwrap();
        assert_eq!(c2.ancestors(mixed).len(), 3);
        assert!(c2.ancestors(c2.index(Task::Add).unwrap()).is_empty());
        assert_eq!(
            CurriculumGraph::new(&[(Task::Add, Task::Mul2), (Task::Mul2, Task::Add)]),
            Err(CurriculumError::Cyclic)
        );
    }

    #[test]
    fn unmastered_sources_take_all_mass() {
        let s = SchedulerState::new(CurriculumGraph::named(CurriculumName::C2));
        let d = s.distribution(&GatedRemainder::default());
        let add = s.graph().index(Task::Add).unwrap();
        assert_eq!(d[add], 1.0);
    }

    #[test]
    fn mastered_add_opens_mul2() {
        let mut s = SchedulerState::new(CurriculumGraph::named(CurriculumName::C2));
        let add = s.graph().index(Task::Add).unwrap();
        s.mastery[add] = 0.95;
        let d = s.distribution(&GatedRemainder::default());
        let mul2 = s.graph().index(Task::Mul2).unwrap();
        assert!((d[add] - 0.1 / 1.15).abs() < 1e-12);
        assert!((d[mul2] - 1.05 / 1.15).abs() < 1e-12);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_mastered_is_uniform() {
        let mut s = SchedulerState::new(CurriculumGraph::named(CurriculumName::C4));
        s.mastery.iter_mut().for_each(|m| *m = 1.0);
        let d = s.distribution(&GatedRemainder::default());
        assert!(d.iter().all(|p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn ema_converges() {
        let mut s = SchedulerState::new(CurriculumGraph::single(Task::Mixed));
        for _ in 0..1000 {
            s.update_mastery(Task::Mixed, 1.0).unwrap();
        }
        assert!(1.0 - s.mastery_of(Task::Mixed).unwrap() < 1e-3);
        assert_eq!(s.update_mastery(Task::Add, 1.0), Err(CurriculumError::UnknownTask));
        assert_eq!(s.update_mastery(Task::Mixed, 1.5), Err(CurriculumError::AccuracyOutOfRange));
    }

    #[test]
    fn batch_accounting() {
        let s = SchedulerState::new(CurriculumGraph::single(Task::Mul3));
        let batches = s.sample_batches(&GatedRemainder::default(), 32, &mut record_rng(1, 0));
        assert_eq!(batches.len(), 10);
        assert!(batches.iter().all(|b| b.tasks.len() == 32 && b.tasks.iter().all(|&t| t == Task::Mul3)));
    }
}
