# Identity suite orchestration
