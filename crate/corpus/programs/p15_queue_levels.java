import java.util.ArrayDeque;
import java.util.Deque;

public class QueueLevels {
    public static int main(String[] args) {
        Deque<Integer> queue = new ArrayDeque<>();
        queue.offer(1);
        int levels = 0;
        int visited = 0;
        while (!queue.isEmpty()) {
            int size = queue.size();
            for (int k = 0; k < size; k++) {
                int node = queue.poll();
                visited++;
                if (node * 2 <= 7) {
                    queue.offer(node * 2);
                    queue.offer(node * 2 + 1);
                }
            }
            levels++;
        }
        return levels;
    }
}
