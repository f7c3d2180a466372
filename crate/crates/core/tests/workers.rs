use adaptive_gof::tables::{reproduce_table, TableId};

fn with_workers(threads: usize, id: TableId) -> String {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| reproduce_table(id, 11, 0.01).unwrap())
}

#[test]
fn table_output_does_not_depend_on_worker_count() {
    for id in [TableId::T1, TableId::T3] {
        let one = with_workers(1, id);
        assert_eq!(one, with_workers(4, id));
        assert_eq!(one, with_workers(16, id));
    }
}
