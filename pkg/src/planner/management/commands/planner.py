from django.core.management.base import BaseCommand

from planner import cli


class Command(BaseCommand):
    help = "Feature guided planning: validate, plan, episode, bench and generate"

    def add_arguments(self, parser):
        cli.add_arguments(parser)

    def handle(self, *args, **options):
        cli.dispatch(options, self.stdout, self.stderr)
