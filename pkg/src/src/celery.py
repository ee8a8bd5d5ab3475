import os

from celery import Celery


os.environ.setdefault("DJANGO_SETTINGS_MODULE", "src.settings")

# Experiments run in a worker process; results land in ExperimentRun rows.
app = Celery("fgs_planner")
app.config_from_object("django.conf:settings", namespace="CELERY")
app.autodiscover_tasks(["planner"])
